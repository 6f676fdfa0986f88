"""Python access to the mfspec core.

Potentials are given as a float (constant), a list (one value per symbol)
or a dict mapping words of equal length to values.
"""

from ._core import (
    BracketingFailure,
    DegenerateSpectrum,
    EqualRatios,
    Error,
    InadmissibleWord,
    InfeasibleConstraint,
    InvalidArgument,
    ReducibleMatrix,
    alpha,
    conformality_defect,
    endpoints,
    format_double,
    gibbs_certificate,
    irregular_point,
    legendre_check,
    level_set_concentration,
    make_grid,
    pressure,
    solve_T,
    symbol_alphabet,
    temperature_curve,
)
from ._core import Family as _Family

__all__ = [
    "BracketingFailure",
    "DegenerateSpectrum",
    "EqualRatios",
    "Error",
    "InadmissibleWord",
    "InfeasibleConstraint",
    "InvalidArgument",
    "ReducibleMatrix",
    "alpha",
    "conformality_defect",
    "endpoints",
    "family",
    "format_double",
    "gibbs_certificate",
    "irregular_point",
    "legendre_check",
    "level_set_concentration",
    "make_grid",
    "pressure",
    "solve_T",
    "symbol_alphabet",
    "temperature_curve",
]


def _potential(value, alphabet_size):
    symbols = symbol_alphabet()[:alphabet_size]
    if isinstance(value, (int, float)):
        return 1, {s: float(value) for s in symbols}
    if isinstance(value, dict):
        depths = {len(w) for w in value}
        if len(depths) != 1:
            raise InvalidArgument("potential words must share one length")
        return depths.pop(), {w: float(v) for w, v in value.items()}
    values = list(value)
    if len(values) != alphabet_size:
        raise InvalidArgument(f"expected {alphabet_size} per-symbol values, got {len(values)}")
    return 1, {s: float(v) for s, v in zip(symbols, values)}


def family(transitions, g, jac):
    """Potential family q*g - t*jac on the SFT with the given 0/1 matrix.

    g is normalized to zero pressure; jac must be strictly positive.
    """
    n = len(transitions)
    g_depth, g_values = _potential(g, n)
    jac_depth, jac_values = _potential(jac, n)
    return _Family(transitions, g_depth, g_values, jac_depth, jac_values)
