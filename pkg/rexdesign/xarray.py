from typing import Sequence

import numpy as np
import pandas as pd
import xarray as xr


@xr.register_dataset_accessor("rex")
class DatasetAccessor:
    def __init__(self, obj: xr.Dataset):
        self._obj = obj

    def _check(self) -> None:
        missing = {"seconds", "log_eff"} - set(self._obj.data_vars)
        if missing or "iter" not in self._obj.dims:
            raise ValueError(
                "The Dataset must have `seconds` and `log_eff` variables over an `iter` dimension, "
                "as produced by `BenchReport.to_xarray`."
            )

    def time_to(self, level: float) -> xr.DataArray:
        """Find the first elapsed time at which each run reached a log-efficiency level.

        Parameters
        ----------
        level : float
            A log-efficiency, -log10(1 - eff). Levels 2, 4 and 6 correspond to efficiencies 0.99, 0.9999 and
            0.999999.

        Returns
        -------
        xarray.DataArray
            Seconds until ``log_eff >= level`` over all dimensions except ``iter``. NaN for runs that never reached it.

        Raises
        ------
        ValueError
            If the Dataset is not a benchmark trajectory Dataset.

        Examples
        --------
        >>> ds = report.to_xarray()
        >>> ds.rex.time_to(4).sel(algorithm="rex")
        """
        self._check()
        reached = self._obj.log_eff >= level
        first = self._obj.seconds.where(reached).min("iter", skipna=True)
        return first.rename(f"time_to_{level:g}")

    def summary(self, levels: Sequence[float] = (2, 4, 6)) -> pd.DataFrame:
        """Tabulate the median time over repeats to reach each log-efficiency level.

        Parameters
        ----------
        levels : Sequence[float], default (2, 4, 6)
            Log-efficiency levels.

        Returns
        -------
        pandas.DataFrame
            One row per (instance, algorithm) and one column per level, with the number of repeats that reached the
            highest level in ``reached``.
        """
        self._check()
        cols = {}
        for level in levels:
            t = self.time_to(level)
            dims = [d for d in t.dims if d == "repeat"]
            cols[f"t_{level:g}"] = t.median(dims, skipna=True) if dims else t

        ds = xr.Dataset(cols)
        top = self.time_to(max(levels))
        ds["reached"] = np.isfinite(top).sum("repeat") if "repeat" in top.dims else np.isfinite(top)
        return ds.to_dataframe()
