import contextlib
import hashlib
import os
import warnings
from typing import Any, Iterator

import joblib  # type: ignore
import numpy as np
import pandas as pd
from tqdm.auto import tqdm  # type: ignore

from rexdesign.design import Design
from rexdesign.exceptions import InputError

FLOAT_FORMAT = "%.17g"


def read_matrix_csv(path: str) -> np.ndarray:
    """Read a headerless, comma-separated numeric matrix. Blank lines are skipped.

    Parameters
    ----------
    path : str
        The path to the CSV file.

    Returns
    -------
    numpy.ndarray
        A 2D float array with one row per non-blank line.

    Raises
    ------
    InputError
        If the file is missing, empty, or has a non-numeric entry or ragged rows. The message carries the file
        name and, for parse errors, the line number reported by the parser.
    """
    if not os.path.isfile(path):
        raise InputError(f"{path}: no such file.")

    try:
        with warnings.catch_warnings():
            # Empty files warn before returning an empty array; reported below instead
            warnings.simplefilter("ignore", UserWarning)
            X = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from None

    if X.size == 0:
        raise InputError(f"{path}: the file contains no data.")
    if not np.all(np.isfinite(X)):
        row = int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])
        raise InputError(f"{path}: data row {row + 1} contains a non-finite value.")
    return X


def write_matrix_csv(path: str, X: np.ndarray) -> None:
    """Write a matrix as a headerless CSV with 17 significant digits."""
    pd.DataFrame(np.atleast_2d(X)).to_csv(
        path, header=False, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def write_design_csv(path: str, design: Design) -> None:
    """Write the support of a design as ``index,weight`` rows."""
    supp = design.support
    df = pd.DataFrame({"index": supp, "weight": design.weights[supp]})
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_design_csv(path: str, n: int) -> Design:
    """Read an ``index,weight`` design file back into a design on ``n`` points."""
    df = pd.read_csv(path, float_precision="round_trip")
    w = np.zeros(n)
    w[df["index"].to_numpy()] = df["weight"].to_numpy()
    return Design(w)


def file_digest(path: str) -> str:
    """The SHA-256 hex digest of a file."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@contextlib.contextmanager
def parallel_tqdm(tqdm_object: tqdm) -> Iterator[tqdm]:
    """Context manager to patch joblib to report completed tasks into the given tqdm progress bar.

    Reference
    ---------
    https://stackoverflow.com/questions/24983493/tracking-progress-of-joblib-parallel-execution

    Example
    -------
    >>> with Parallel(n_jobs=2) as p:
    >>>     with parallel_tqdm(tqdm(desc="Benchmark", total=10)):
    >>>         runs = p(delayed(run_cell)(cell) for cell in cells)
    """

    class TqdmBatchCompletionCallback(joblib.parallel.BatchCompletionCallBack):
        def __call__(self, *args: Any, **kwargs: Any) -> Any:
            tqdm_object.update(n=self.batch_size)
            return super().__call__(*args, **kwargs)

    old_batch_callback = joblib.parallel.BatchCompletionCallBack
    joblib.parallel.BatchCompletionCallBack = TqdmBatchCompletionCallback
    try:
        yield tqdm_object
    finally:
        joblib.parallel.BatchCompletionCallBack = old_batch_callback
        tqdm_object.close()
