"""Loading, validation and indexing of imbalanced binary-claim panels.

A dataset is stored year-sliced: for every (re-indexed) year t we keep the
claim indicators, the covariate matrix, and the universe indices of the
subjects observed that year, in file row order. Pairwise cohort intersections
are computed lazily and cached because every pairwise test needs them.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DuplicateCell, EmptyYear, MalformedRow

COLUMN_BINARY = "binary"
COLUMN_CONTINUOUS = "continuous"

# validate_design diagnostic codes
DEGENERATE_RESPONSE = "DegenerateResponse"
CONSTANT_COLUMN = "ConstantColumn"
RANK_DEFICIENT = "RankDeficient"


@dataclass(frozen=True)
class CovariateSchema:
    """Ordered covariate labels with per-column kinds."""

    names: tuple
    types: tuple

    def __post_init__(self):
        names = tuple(self.names)
        types = tuple(self.types)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "types", types)
        if len(names) == 0:
            raise DomainError("schema needs at least one covariate")
        if len(set(names)) != len(names) or any(not n for n in names):
            raise DomainError("covariate names must be unique and nonempty")
        if len(types) != len(names):
            raise DomainError("names and types must have equal length")
        for kind in types:
            if kind not in (COLUMN_BINARY, COLUMN_CONTINUOUS):
                raise DomainError(f"unknown column type {kind!r}")

    @property
    def n_covariates(self):
        return len(self.names)

    @classmethod
    def from_json(cls, text):
        spec = json.loads(text)
        return cls(names=tuple(spec["names"]), types=tuple(spec["types"]))

    @classmethod
    def all_continuous(cls, names):
        return cls(names=tuple(names), types=(COLUMN_CONTINUOUS,) * len(names))


@dataclass(frozen=True)
class PanelRecord:
    """One (subject, year) observation."""

    subject_id: str
    year_index: int
    z: int
    x: np.ndarray


class PanelDataset:
    """Immutable year-sliced panel with cohort indexing.

    Attributes
    ----------
    schema : CovariateSchema
    T : number of years (re-indexed 1..T)
    year_labels : original calendar labels in ascending order
    subjects : subject ids ordered by first appearance (the universe A)
    z[t], x[t], rows[t] : per-year indicator vector, covariate matrix and
        universe indices, in file row order (keys are 1-based years)
    """

    def __init__(self, schema, year_labels, subjects, z_by_year, x_by_year,
                 rows_by_year):
        self.schema = schema
        self.year_labels = tuple(year_labels)
        self.T = len(self.year_labels)
        if self.T < 2:
            raise DomainError(f"panel needs at least 2 years, got {self.T}")
        self.subjects = tuple(subjects)
        self.n = len(self.subjects)
        self.z = {t: np.asarray(z_by_year[t], dtype=float) for t in z_by_year}
        self.x = {t: np.asarray(x_by_year[t], dtype=float) for t in x_by_year}
        self.rows = {t: np.asarray(rows_by_year[t], dtype=np.intp)
                     for t in rows_by_year}
        for t in range(1, self.T + 1):
            if len(self.z[t]) == 0:
                raise DomainError(f"year {t} has no observations")
        # augmented designs (intercept prepended), built once and shared
        self._xbar = {t: np.hstack([np.ones((len(self.z[t]), 1)), self.x[t]])
                      for t in self.z}
        self._position = {t: {int(u): j for j, u in enumerate(self.rows[t])}
                          for t in self.rows}
        self._pair_cache = {}

    @property
    def P(self):
        return self.schema.n_covariates

    def n_t(self, t):
        return len(self.z[t])

    def design(self, t):
        """Augmented design matrix for year t (leading column of ones)."""
        return self._xbar[t]

    def cohort(self, t):
        """Universe indices of subjects observed in year t, in row order."""
        return self.rows[t]

    def pair_cohort(self, s, t):
        """(universe_idx, pos_in_s, pos_in_t) for subjects in A_s ∩ A_t.

        Sorted by universe index; cached per unordered pair.
        """
        if s == t:
            idx = np.sort(self.rows[t])
            pos = np.array([self._position[t][int(u)] for u in idx], dtype=np.intp)
            return idx, pos, pos
        key = (min(s, t), max(s, t))
        if key not in self._pair_cache:
            a, b = key
            common = np.intersect1d(self.rows[a], self.rows[b])
            pos_a = np.array([self._position[a][int(u)] for u in common],
                             dtype=np.intp)
            pos_b = np.array([self._position[b][int(u)] for u in common],
                             dtype=np.intp)
            self._pair_cache[key] = (common, pos_a, pos_b)
        common, pos_a, pos_b = self._pair_cache[key]
        if s <= t:
            return common, pos_a, pos_b
        return common, pos_b, pos_a

    def n_st(self, s, t):
        return len(self.pair_cohort(s, t)[0])

    def records(self):
        """Iterate observations as PanelRecord, in year-major row order."""
        for t in range(1, self.T + 1):
            for j, u in enumerate(self.rows[t]):
                yield PanelRecord(subject_id=self.subjects[u],
                                  year_index=t,
                                  z=int(self.z[t][j]),
                                  x=self.x[t][j])


@dataclass
class PanelSummary:
    """Per-year sizes and claim proportions plus pairwise cohort sizes."""

    year_labels: tuple
    n_t: dict
    claim_proportion: dict
    n_st: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({
            "year_labels": list(self.year_labels),
            "n_t": {str(t): v for t, v in sorted(self.n_t.items())},
            "claim_proportion": {str(t): v for t, v in
                                 sorted(self.claim_proportion.items())},
            "n_st": {f"{s},{t}": v for (s, t), v in sorted(self.n_st.items())},
        }, indent=2, sort_keys=True)

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["year", "label", "n_t", "claim_proportion"])
        for t in sorted(self.n_t):
            w.writerow([t, self.year_labels[t - 1], self.n_t[t],
                        repr(self.claim_proportion[t])])
        return out.getvalue()


def load_panel(source, schema):
    """Parse CSV text into a PanelDataset.

    Header must be ``subject_id,year,z,<name1>,...,<nameP>``. Years are
    re-indexed to contiguous 1..T in ascending calendar order; the subject
    universe is ordered by first appearance in the file.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty input") from None
    expected = ["subject_id", "year", "z"] + list(schema.names)
    if [h.strip() for h in header] != expected:
        raise MalformedRow(1, f"header {header!r} does not match {expected!r}")

    p = schema.n_covariates
    raw = []  # (subject_id, calendar_year, z, x)
    seen = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3 + p:
            raise MalformedRow(line_no, f"expected {3 + p} fields, got {len(row)}")
        sid = row[0]
        try:
            year = int(row[1])
        except ValueError:
            raise MalformedRow(line_no, f"bad year {row[1]!r}") from None
        try:
            z = int(row[2])
        except ValueError:
            raise MalformedRow(line_no, f"bad indicator {row[2]!r}") from None
        if z not in (0, 1):
            raise MalformedRow(line_no, f"indicator must be 0/1, got {z}")
        try:
            x = [float(v) for v in row[3:]]
        except ValueError:
            raise MalformedRow(line_no, "unparseable covariate value") from None
        if not all(np.isfinite(x)):
            raise MalformedRow(line_no, "non-finite covariate value")
        if (sid, year) in seen:
            raise DuplicateCell(f"repeated (subject={sid!r}, year={year})")
        seen.add((sid, year))
        raw.append((sid, year, z, x))

    if not raw:
        raise MalformedRow(2, "no data rows")

    years = sorted({r[1] for r in raw})
    for y in range(years[0], years[-1] + 1):
        if y not in years:
            raise EmptyYear(f"calendar year {y} has zero rows")
    year_index = {y: i + 1 for i, y in enumerate(years)}

    subjects = []
    subject_index = {}
    for sid, _, _, _ in raw:
        if sid not in subject_index:
            subject_index[sid] = len(subjects)
            subjects.append(sid)

    z_by_year = {t: [] for t in year_index.values()}
    x_by_year = {t: [] for t in year_index.values()}
    rows_by_year = {t: [] for t in year_index.values()}
    for sid, year, z, x in raw:
        t = year_index[year]
        z_by_year[t].append(z)
        x_by_year[t].append(x)
        rows_by_year[t].append(subject_index[sid])

    return PanelDataset(schema=schema, year_labels=years, subjects=subjects,
                        z_by_year=z_by_year, x_by_year=x_by_year,
                        rows_by_year=rows_by_year)


def cohort_sizes(ds):
    """(n, {n_t}, {n_{s,t}}) with the symmetric pairwise sizes included."""
    n_t = {t: ds.n_t(t) for t in range(1, ds.T + 1)}
    n_st = {}
    for s in range(1, ds.T + 1):
        for t in range(1, ds.T + 1):
            n_st[(s, t)] = ds.n_st(s, t)
    return ds.n, n_t, n_st


def summarize(ds):
    """PanelSummary with exact claim proportions per year."""
    n_t = {}
    prop = {}
    for t in range(1, ds.T + 1):
        n_t[t] = ds.n_t(t)
        prop[t] = float(np.sum(ds.z[t]) / ds.n_t(t))
    n_st = {(s, t): ds.n_st(s, t)
            for s in range(1, ds.T + 1) for t in range(s + 1, ds.T + 1)}
    return PanelSummary(year_labels=ds.year_labels, n_t=n_t,
                        claim_proportion=prop, n_st=n_st)


def validate_design(ds, t, row_mask=None):
    """Diagnostics for year t's augmented design: degenerate response,
    constant columns, exact rank deficiency.

    row_mask optionally restricts to a subset of rows (e.g. positive-weight
    rows during a weighted fit). Returns a list of (code, detail) tuples;
    an empty list means the design is usable.
    """
    if not 1 <= t <= ds.T:
        raise DomainError(f"year {t} outside 1..{ds.T}")
    z = ds.z[t]
    xbar = ds.design(t)
    if row_mask is not None:
        z = z[row_mask]
        xbar = xbar[row_mask]
    out = []
    if len(z) == 0 or np.all(z == z[0]):
        out.append((DEGENERATE_RESPONSE,
                    f"year {t}: response constant at {z[0] if len(z) else 'nan'}"))
    for j, name in enumerate(ds.schema.names):
        col = xbar[:, j + 1]
        if len(col) and np.all(col == col[0]):
            out.append((CONSTANT_COLUMN, f"year {t}: column {name!r} constant"))
    if len(z) and np.linalg.matrix_rank(xbar) < xbar.shape[1]:
        out.append((RANK_DEFICIENT,
                    f"year {t}: augmented design has deficient rank"))
    return out


def to_csv(ds):
    """Serialize a dataset back to the input CSV format (round-trip)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["subject_id", "year", "z"] + list(ds.schema.names))
    for t in range(1, ds.T + 1):
        label = ds.year_labels[t - 1]
        for j, u in enumerate(ds.rows[t]):
            w.writerow([ds.subjects[u], label, int(ds.z[t][j])]
                       + [repr(float(v)) for v in ds.x[t][j]])
    return out.getvalue()
