"""
Print the worked Jordan example for a range of degrees and fit its growth in 1/h.
"""
import argparse
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.processing.example import example_case, example_scaling_rows
from src.processing.scaling import scaling_fit
import structlog

# Configure logging
structlog.configure(
    processors=[
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.dev.ConsoleRenderer(),
    ],
)
logger = structlog.get_logger()


def main():
    parser = argparse.ArgumentParser(description="Reproduce the worked Jordan example table.")
    parser.add_argument("--m-min", type=int, default=2)
    parser.add_argument("--m-max", type=int, default=30)
    args = parser.parse_args()

    print(f"\n{'='*72}")
    print("Jordan example: ||(q^w - 1)^{-1} phi_(m,0)||^2 at h = 1/m")
    print(f"{'='*72}\n")
    print(f"{'m':>4}  {'squared norm':>22}  {'rel. error':>10}  {'>= m!':>5}  status")

    failures = 0
    for m in range(args.m_min, args.m_max + 1):
        report = example_case(m)
        failures += not report.passed
        print(
            f"{m:>4}  {report.squared_norm:>22.12e}  {report.relative_error:>10.2e}  "
            f"{'yes' if report.exceeds_factorial else 'no':>5}  "
            f"{'PASS' if report.passed else 'FAIL'}"
        )

    rows = example_scaling_rows(range(max(args.m_min, 3), args.m_max + 1))
    print()
    for model in ("inv_h", "inv_h_log"):
        fit = scaling_fit(rows, model)
        print(f"{model:>10}: A = {fit.A:.4f}, residual = {fit.residual:.3e}")

    if failures:
        logger.error("Example mismatches", failures=failures)
        sys.exit(2)
    print("\nAll degrees match the closed form.")


if __name__ == "__main__":
    main()
