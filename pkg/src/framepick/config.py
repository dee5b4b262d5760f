"""Run configuration shared by the CLI and the batch pipeline."""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .frames import FilterbankFrame, GaborFrame
from .peakpick import DEFAULT_LAMBDA, LambdaPolicy, SliceConfig
from .preprocess import DEFAULT_TOPHAT_WINDOW, tic_normalize, tophat_baseline
from .spatial import parse_kernel

__all__ = ["RunConfig", "parse_baseline"]


def parse_baseline(text):
    """``none`` -> None, ``tophat`` / ``tophat:W`` -> window width W."""
    if text in (None, "none"):
        return None
    name, _, arg = text.partition(":")
    if name != "tophat":
        raise ParameterError(f"unknown baseline method {text!r}")
    try:
        width = int(arg) if arg else DEFAULT_TOPHAT_WINDOW
    except ValueError:
        raise ParameterError(f"bad top-hat width in {text!r}") from None
    if width < 1:
        raise ParameterError("top-hat width must be positive")
    return width


@dataclass
class RunConfig:
    """Every knob of a pick/denoise/tune run; serialised next to each output."""

    slice_len: int = 60
    overlap: float = 0.5
    frame: str = "gabor"
    window_width: int = 20
    time_step: int = 1
    freq_step: int = 1
    fmin: float = 0.05
    bw: float = 0.05
    bins: int = 30
    lambda_mode: str = "fixed"
    base_lambda: float = DEFAULT_LAMBDA
    target: int | None = None
    spatial: str = "none"
    kernel_size: int = 3
    baseline: str = "none"
    tic: bool = False
    min_score: float = 0.0
    min_separation: int = 3
    match_tol: float = 0.01
    threads: int = 1
    seed: int = 0

    def validate(self):
        """Build every component once so bad combinations fail up front."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.slice_config()
        self.build_frame()
        self.policy()
        self.neighborhood()
        parse_baseline(self.baseline)
        if self.frame not in ("gabor", "filterbank"):
            raise ParameterError(f"unknown frame {self.frame!r}")
        if self.min_separation < 1:
            raise ParameterError("min_separation must be positive")
        if self.min_score < 0:
            raise ParameterError("min_score must be nonnegative")
        if not self.match_tol > 0:
            raise ParameterError("match tolerance must be positive")
        if self.threads < 1:
            raise ParameterError("threads must be positive")
        return self

    def slice_config(self):
        return SliceConfig(self.slice_len, self.overlap)

    def build_frame(self):
        if self.frame == "gabor":
            return GaborFrame(self.slice_len, self.window_width, self.time_step, self.freq_step)
        if self.frame == "filterbank":
            return FilterbankFrame(self.slice_len, self.fmin, self.bw, self.bins)
        raise ParameterError(f"unknown frame {self.frame!r}")

    def policy(self):
        return LambdaPolicy(self.lambda_mode, self.base_lambda, self.target)

    def neighborhood(self):
        if self.spatial in (None, "none"):
            return None
        return parse_kernel(self.spatial, self.kernel_size)

    def preprocess(self, f):
        f = np.asarray(f, dtype=float)
        width = parse_baseline(self.baseline)
        if width is not None:
            f = tophat_baseline(f, width)[0]
        if self.tic:
            f = tic_normalize(f)
        return f

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)
