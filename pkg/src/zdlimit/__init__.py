"""Numerical backends for the zero-dispersion limit of the Benjamin-Ono equation on the line."""

from .characteristics import (
    CausticSet,
    CharacteristicFan,
    ZDField,
    critical_values,
    solve_fan,
    zd_grid,
    zd_pointwise,
)
from .datum import (
    InitialDatum,
    Mollified,
    PiecewiseLinear,
    Rational,
    SampledC1,
    Step,
    mollify,
    zero_datum,
)
from .errors import (
    BlowupError,
    CausticHit,
    NotC1Error,
    SolveFailure,
    UnderResolved,
    ZDError,
)
from .rational import zd_rational

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "CausticHit",
    "CausticSet",
    "CharacteristicFan",
    "InitialDatum",
    "Mollified",
    "NotC1Error",
    "PiecewiseLinear",
    "Rational",
    "SampledC1",
    "SolveFailure",
    "Step",
    "UnderResolved",
    "ZDError",
    "ZDField",
    "critical_values",
    "mollify",
    "solve_fan",
    "zd_grid",
    "zd_pointwise",
    "zd_rational",
    "zero_datum",
]
