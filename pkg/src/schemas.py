import pandera as pa
from pandera import Column, Check
import numpy as np
import pandas as pd


def field_schema(with_derivatives: bool = False, nonnegative: bool = True) -> pa.DataFrameSchema:
    cols = {
        "x": Column(float, nullable=False),
        "y": Column(float, nullable=False),
        "value": Column(float, [Check.ge(0)] if nonnegative else [], nullable=False),
    }
    if with_derivatives:
        cols["dx"] = Column(float, nullable=False)
        cols["dy"] = Column(float, nullable=False)
    return pa.DataFrameSchema(cols, strict=True, ordered=True, coerce=True)


SweepSchema = pa.DataFrameSchema({
    "a": Column(float, Check.gt(0), nullable=False),
    "measured_l2": Column(float, Check.ge(0), nullable=False),
    "measured_w12": Column(float, Check.ge(0), nullable=False),
    "bound_l2": Column(float, Check.ge(0), nullable=False),
    "bound_w12": Column(float, Check.ge(0), nullable=False),
    "bound_fraction": Column(float, Check.ge(0), nullable=False),
    "log_stability_ratio": Column(float, Check(np.isfinite), nullable=False),
}, strict=True, ordered=True, coerce=True)

StftCoeffSchema = pa.DataFrameSchema({
    "n": Column(int, nullable=False),
    "k": Column(int, nullable=False),
    "re": Column(float, nullable=False),
    "im": Column(float, nullable=False),
}, strict=True, ordered=True, coerce=True)

WaveletCoeffSchema = pa.DataFrameSchema({
    "j": Column(int, Check.ge(-1), nullable=False),
    "k": Column(int, nullable=False),
    "coeff": Column(float, nullable=False),
}, strict=True, ordered=True, coerce=True)

ProfileSchema = pa.DataFrameSchema({
    "t": Column(float, nullable=False),
    "f_plus": Column(float, nullable=False),
    "f_minus": Column(float, nullable=False),
}, strict=True, ordered=True, coerce=True)

SubspaceSchema = pa.DataFrameSchema({
    "k": Column(int, Check.ge(1), nullable=False),
    "a": Column(float, Check.gt(0), nullable=False),
    "dim": Column(int, Check.ge(3), nullable=False),
    "gram_cond": Column(float, Check.gt(0), nullable=False),
    "quotient_distance": Column(float, Check.ge(0), nullable=False),
    "measured_w12": Column(float, Check.ge(0), nullable=False),
    "log_inverse_stability_lb": Column(float, nullable=False),
}, strict=True, ordered=True, coerce=True)


def validate(df: pd.DataFrame, schema: pa.DataFrameSchema) -> pd.DataFrame:
    if df is None or df.empty:
        return df
    return schema.validate(df)
