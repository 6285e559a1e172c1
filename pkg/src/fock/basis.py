from dataclasses import dataclass, field
from functools import lru_cache
from math import comb


def dimension(n: int, m: int) -> int:
    """ν_m, the number of monomials of degree m in n variables."""
    return comb(m + n - 1, n - 1)


@lru_cache(maxsize=256)
def _compositions(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    """All α with |α| = m, first coordinate descending (graded-lex, largest first)."""
    if n == 1:
        return ((m,),)
    out = []
    for first in range(m, -1, -1):
        for rest in _compositions(n - 1, m - first):
            out.append((first,) + rest)
    return tuple(out)


@dataclass(frozen=True)
class MultiIndexBasis:
    """
    Monomial basis of E_m, the homogeneous polynomials of degree m in n variables.

    Ordering: (3,0), (2,1), (1,2), (0,3) for n=2, m=3, i.e. lexicographically
    descending. A Jordan-type shift x_{j+1}∂_{x_j} moves every index strictly later
    in this order.
    """

    n: int
    m: int
    indices: tuple[tuple[int, ...], ...]
    position: dict[tuple[int, ...], int] = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.indices)


def enumerate_basis(n: int, m: int) -> MultiIndexBasis:
    if n < 1 or m < 0:
        raise ValueError(f"enumerate_basis needs n ≥ 1 and m ≥ 0, got n={n}, m={m}")
    indices = _compositions(n, m)
    return MultiIndexBasis(
        n=n, m=m, indices=indices, position={alpha: k for k, alpha in enumerate(indices)}
    )


def degree_range_basis(n: int, degrees) -> list[tuple[int, ...]]:
    """Concatenated indices of several degrees, in the given degree order."""
    out: list[tuple[int, ...]] = []
    for m in degrees:
        out.extend(_compositions(n, m))
    return out
