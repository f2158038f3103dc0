"""A module for storing and querying experiment result rows."""

from collections.abc import Iterable, Iterator
from dataclasses import asdict, dataclass, fields

import pandas as pd

COLUMNS = [
    "experiment",
    "snr_db",
    "position_m",
    "antenna_id",
    "estimator",
    "pilot_design",
    "trials",
    "metric_name",
    "metric_value",
    "seed",
]


@dataclass(frozen=True)
class ResultRow:
    """One aggregated metric of an experiment point.

    Args:
        experiment: The experiment kind (mse-sweep, ber-sweep, ...).
        snr_db: The SNR in dB, None where the metric does not depend on it.
        position_m: The reported train position in m, None where not applicable.
        antenna_id: The antenna (or, for BER rows, the antenna count), None where not applicable.
        estimator: The estimator or receiver name.
        pilot_design: The pilot pattern design.
        trials: The number of Monte Carlo trials aggregated into the value.
        metric_name: The metric (nmse, ber, ici_ratio, mu_delta, ...).
        metric_value: The aggregated value.
        seed: The master seed of the run.
    """

    experiment: str
    snr_db: float | None
    position_m: float | None
    antenna_id: int | None
    estimator: str
    pilot_design: str
    trials: int
    metric_name: str
    metric_value: float
    seed: int

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"A result row needs at least one trial, got {self.trials}.")

    def to_dict(self) -> dict:
        return asdict(self)


assert [f.name for f in fields(ResultRow)] == COLUMNS


class ResultStore:
    """A class for collecting result rows in insertion order.

    Args:
        rows: Rows to start with.
    """

    def __init__(self, rows: Iterable[ResultRow] = ()):
        self._rows: list[ResultRow] = []
        self.add(rows)

    def add(self, rows: ResultRow | Iterable[ResultRow]) -> int:
        """Append one row or several rows.

        Returns:
            The number of rows added.
        """
        if isinstance(rows, ResultRow):
            rows = [rows]
        added = 0
        for row in rows:
            if not isinstance(row, ResultRow):
                raise ValueError(f"Expected a ResultRow, got {type(row).__name__}.")
            self._rows.append(row)
            added += 1
        return added

    def extend(self, other: "ResultStore") -> None:
        """Append all rows of another store."""
        self.add(list(other))

    def select(self, **criteria) -> list[ResultRow]:
        """The rows whose fields equal all given values, e.g. ``select(estimator="omp", snr_db=20.0)``.

        Raises:
            ValueError: If a criterion does not name a column.
        """
        unknown = set(criteria) - set(COLUMNS)
        if unknown:
            raise ValueError(f"Unknown result column(s): {', '.join(sorted(unknown))}.")
        return [row for row in self._rows if all(getattr(row, k) == v for k, v in criteria.items())]

    def value(self, **criteria) -> float:
        """The metric value of the single row matching the criteria.

        Raises:
            ValueError: If no row or more than one row matches.
        """
        matches = self.select(**criteria)
        if len(matches) != 1:
            raise ValueError(f"Expected exactly one matching row, found {len(matches)}.")
        return matches[0].metric_value

    def to_frame(self) -> pd.DataFrame:
        """The rows as a data frame with the result columns in their fixed order."""
        return pd.DataFrame([row.to_dict() for row in self._rows], columns=COLUMNS)

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[ResultRow]:
        return iter(self._rows)

    def __getitem__(self, idx: int) -> ResultRow:
        return self._rows[idx]
