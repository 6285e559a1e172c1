import csv
import io
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import ConfigurationError
from src.fock.blocks import TruncatedOperator
from src.fock.gram import gram_matrix
from src.normal_form.pipeline import reduce_to_normal_form
from src.normal_form.weights import WeightForm
from src.processing.models import SweepConfig, load_config
from src.processing.sweep import SweepRow, resolve_input
from src.reporting.csv_output import (
    SPECTRUM_COLUMNS,
    SWEEP_COLUMNS,
    format_float,
    read_normal_form_report,
    to_json,
    write_normal_form_report,
    write_spectrum_csv,
    write_sweep_csv,
)
from src.reporting.matrices import (
    decode_matrix,
    encode_matrix,
    dump_blocks,
    write_matrix_text,
)
from src.spectral.eigenvalues import SpectralData
from src.spectral.spectrum import spectrum


def load_text_matrix(path) -> np.ndarray:
    lines = path.read_text(encoding="utf-8").splitlines()
    rows, cols = (int(v) for v in lines[0].split())
    values = np.array([[float(v) for v in line.split()] for line in lines[1:]])
    assert values.shape == (rows, 2 * cols)
    return values[:, 0::2] + 1j * values[:, 1::2]


def make_row(**overrides) -> SweepRow:
    values = dict(
        h=0.1,
        z=0.2 + 0.1j,
        N_used=12,
        nu_total=12,
        resnorm_flat=20.0,
        dist_spec=0.05,
        converged=True,
        out_of_regime=False,
    )
    values.update(overrides)
    return SweepRow(**values)


class TestFormatting:
    @pytest.mark.parametrize(
        "value, expected",
        [
            (None, ""),
            (math.nan, "nan"),
            (math.inf, "inf"),
            (-math.inf, "-inf"),
            (1.5, "1.500000000000e+00"),
        ],
    )
    def test_format_float(self, value, expected):
        assert format_float(value) == expected


class TestSweepCsv:
    def test_header_and_fields(self, tmp_path):
        path = tmp_path / "out" / "sweep.csv"
        rows = [make_row(), make_row(resnorm_flat=math.inf, converged=False, resnorm_gram=3.0)]
        text = write_sweep_csv(rows, path=path)
        assert path.read_text(encoding="utf-8") == text
        assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)

        records = list(csv.DictReader(io.StringIO(text)))
        assert len(records) == 2
        assert float(records[0]["z_im"]) == pytest.approx(0.1)
        assert records[0]["converged"] == "true"
        assert records[0]["resnorm_gram"] == ""
        assert float(records[0]["log_resnorm_flat"]) == pytest.approx(math.log(20.0))
        assert records[1]["resnorm_flat"] == "inf"
        assert records[1]["log_resnorm_flat"] == "inf"
        assert records[1]["converged"] == "false"

    def test_stream(self):
        buffer = io.StringIO()
        write_sweep_csv([make_row()], stream=buffer)
        assert buffer.getvalue().count("\n") == 2


class TestSpectrumCsv:
    def test_written_columns(self, tmp_path):
        spec = spectrum(SpectralData(lambdas=np.array([0.5j, 0.5j]), clusters=[[0, 1]]), 0.25, 1.0)
        path = tmp_path / "spectrum.csv"
        write_spectrum_csv(spec, path=path)
        with path.open(newline="", encoding="utf-8") as f:
            records = list(csv.DictReader(f))
        assert [int(r["multiplicity"]) for r in records] == [1, 2, 3, 4]
        values = [complex(float(r["re"]), float(r["im"])) for r in records]
        assert_allclose(values, spec.values)

    def test_columns(self):
        assert SPECTRUM_COLUMNS == ["re", "im", "multiplicity"]


class TestJson:
    def test_complex_and_numpy(self):
        data = json.loads(to_json({"z": 1 + 2j, "x": np.float64(0.5), "n": np.int64(3)}))
        assert data == {"z": [1.0, 2.0], "x": 0.5, "n": 3}

    def test_normal_form_report(self, tmp_path, oscillator):
        result = reduce_to_normal_form(oscillator)
        path = tmp_path / "report.json"
        write_normal_form_report(result, path)
        restored = read_normal_form_report(path)
        assert_allclose(restored.M, result.M)
        assert restored.C0 == pytest.approx(result.C0)

    def test_report_drives_a_sweep(self, tmp_path, oscillator, write_config):
        write_normal_form_report(reduce_to_normal_form(oscillator), tmp_path / "report.json")
        path = write_config({"normal_form_report": "report.json", "h_values": [0.1]})
        reduced = resolve_input(load_config(path))
        assert_allclose(reduced.M, [[1j]], atol=1e-12)
        assert reduced.C1 == pytest.approx(4.0)

    def test_bad_report(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_normal_form_report(path)


class TestMatrices:
    def test_encode_decode(self):
        A = np.array([[1 + 2j, 3.0], [0.0, -1j]])
        assert_allclose(decode_matrix(encode_matrix(A), (2, 2)), A)

    def test_plain_reals(self):
        assert_allclose(decode_matrix([[1.0, 2.0], [3.0, 4.0]], (2, 2)), [[1, 2], [3, 4]])

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            decode_matrix([[1.0, 2.0, 3.0]], (2, 2))

    def test_text_dump(self, tmp_path):
        A = np.array([[1 + 2j, 3.0], [0.0, -1j]])
        write_matrix_text(A, tmp_path / "A.txt")
        assert (tmp_path / "A.txt").read_text().splitlines()[0] == "2 2"
        assert_allclose(load_text_matrix(tmp_path / "A.txt"), A)

    def test_dump_blocks(self, tmp_path, jordan_M):
        op = TruncatedOperator.build(jordan_M, 0.25, 3)
        gram = gram_matrix(WeightForm(G=np.eye(4)), 0.25, range(3))
        written = dump_blocks(op.blocks, tmp_path / "blocks", gram)
        assert [p.name for p in written] == [
            "block_m000.txt",
            "block_m001.txt",
            "block_m002.txt",
            "gram.txt",
        ]
        assert_allclose(load_text_matrix(written[2]), op.blocks[2].A)
        assert load_text_matrix(written[3]).shape == (6, 6)

    def test_config_matrix(self):
        config = SweepConfig.model_validate({"M": [[[0.0, 1.0]]], "h_values": [0.1]})
        assert_allclose(config.reduced_matrix(), [[1j]])
