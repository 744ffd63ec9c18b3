"""MULAN-style ARFF ingestion, feature standardization and seeded folds."""

from __future__ import annotations

import csv
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

NUMERIC_TYPES = ("numeric", "real", "integer")


class ArffError(ValueError):
    """Parse failure; ``line`` is 1-based, ``attribute`` names the column if known."""

    def __init__(self, message, path=None, line=None, attribute=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if attribute is not None:
            where.append(f"attribute {attribute!r}")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.path = path
        self.line = line
        self.attribute = attribute


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "data"
    feature_names: tuple = ()
    label_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        Y = np.asarray(self.labels)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("features and labels must be 2-D")
        if X.shape[0] < 1 or X.shape[1] < 1 or Y.shape[1] < 1:
            raise ValueError(f"empty dataset: features {X.shape}, labels {Y.shape}")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {Y.shape[0]} label rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if not np.all((Y == 1) | (Y == -1)):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(Y.astype(np.int8)))
        fn = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        ln = tuple(self.label_names) or tuple(f"y{j}" for j in range(Y.shape[1]))
        if len(fn) != X.shape[1] or len(ln) != Y.shape[1]:
            raise ValueError("name lists do not match matrix widths")
        object.__setattr__(self, "feature_names", fn)
        object.__setattr__(self, "label_names", ln)

    @property
    def m(self):
        return self.features.shape[0]

    @property
    def n(self):
        return self.features.shape[1]

    @property
    def d(self):
        return self.labels.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.name,
                       self.feature_names, self.label_names)

    def with_features(self, X) -> "Dataset":
        return Dataset(X, self.labels, self.name, self.feature_names, self.label_names)


# -- ARFF ------------------------------------------------------------------

def _split_csv(text: str):
    # quotes around nominal values are legal in ARFF rows
    return next(csv.reader([text], skipinitialspace=True, quotechar="'"))


def _unquote(name: str) -> str:
    name = name.strip()
    if len(name) >= 2 and name[0] == name[-1] and name[0] in "'\"":
        return name[1:-1]
    return name


_ATTR = re.compile(r"""@attribute\s+('(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"|\S+)\s+(.*)$""",
                   re.IGNORECASE)


def read_mulan_xml(path) -> list[str]:
    """Label names listed in a MULAN ``<labels>`` file."""
    root = ET.parse(path).getroot()
    return [el.attrib["name"] for el in root.iter() if el.tag.split("}")[-1] == "label"]


def _parse_value(tok, kind, path, lineno, attr):
    tok = _unquote(tok)
    if tok == "?":
        raise ArffError("missing value", path, lineno, attr)
    if kind == "label":
        if tok not in ("0", "1"):
            raise ArffError(f"label value {tok!r} is not 0 or 1", path, lineno, attr)
        return 1.0 if tok == "1" else -1.0
    try:
        v = float(tok)
    except ValueError:
        raise ArffError(f"non-numeric value {tok!r}", path, lineno, attr) from None
    if not np.isfinite(v):
        raise ArffError(f"non-finite value {tok!r}", path, lineno, attr)
    return v


def load_arff(path, labels: int | Sequence[str] | None = None, xml=None) -> Dataset:
    """Read a multi-label ARFF file.

    ``labels`` is either the number of trailing label attributes or a list of
    label attribute names.  When omitted, names are read from the MULAN XML
    file ``xml``.  Labels must be {0,1} and are mapped to {-1,+1}.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    if labels is None:
        if xml is None:
            raise ValueError("give a label count, a list of label names, or a MULAN XML file")
        labels = read_mulan_xml(xml)

    relation = path.stem
    attrs = []  # (name, type, lineno)
    rows = []
    in_data = False
    with open(path, encoding="utf-8") as fh:
        lines = list(enumerate(fh, start=1))

    for lineno, raw in lines:
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            low = line.lower()
            if low.startswith("@relation"):
                relation = _unquote(line[9:]) or relation
            elif low.startswith("@attribute"):
                mt = _ATTR.match(line)
                if mt is None:
                    raise ArffError("malformed @attribute line", path, lineno)
                attrs.append((_unquote(mt.group(1)), mt.group(2).strip(), lineno))
            elif low.startswith("@data"):
                in_data = True
            else:
                raise ArffError(f"unexpected header line {line[:40]!r}", path, lineno)
            continue
        rows.append((lineno, line))

    if not in_data:
        raise ArffError("no @data section", path)
    if not attrs:
        raise ArffError("no attributes declared", path)

    names = [a[0] for a in attrs]
    if isinstance(labels, (int, np.integer)):
        q = int(labels)
        if not 1 <= q < len(attrs):
            raise ValueError(f"label count {q} does not fit {len(attrs)} attributes")
        label_idx = list(range(len(attrs) - q, len(attrs)))
    else:
        lookup = {nm: i for i, nm in enumerate(names)}
        missing = [nm for nm in labels if nm not in lookup]
        if missing:
            raise ValueError(f"label attributes not in file: {missing}")
        label_idx = [lookup[nm] for nm in labels]
    label_set = set(label_idx)
    feat_idx = [i for i in range(len(attrs)) if i not in label_set]
    if not feat_idx:
        raise ValueError("every attribute is a label; no features left")

    kinds = []
    for i, (nm, typ, lineno) in enumerate(attrs):
        t = typ.lower()
        if i in label_set:
            vals = None
            if t.startswith("{") and t.endswith("}"):
                vals = {_unquote(v) for v in t[1:-1].split(",")}
            if t not in NUMERIC_TYPES and not (vals and vals <= {"0", "1"}):
                raise ArffError(f"label attribute type {typ!r} is not binary", path, lineno, nm)
            kinds.append("label")
        else:
            if t not in NUMERIC_TYPES:
                raise ArffError(f"feature attribute type {typ!r} is not numeric", path, lineno, nm)
            kinds.append("num")

    width = len(attrs)
    table = np.zeros((len(rows), width))
    # sparse rows leave omitted entries at zero, which is "0" for labels too
    label_cols = np.array(label_idx, dtype=int)
    table[:, label_cols] = -1.0
    for r, (lineno, line) in enumerate(rows):
        if line.startswith("{"):
            if not line.endswith("}"):
                raise ArffError("unterminated sparse row", path, lineno)
            body = line[1:-1].strip()
            for item in (_split_csv(body) if body else []):
                parts = item.split(None, 1)
                if len(parts) != 2:
                    raise ArffError(f"bad sparse entry {item!r}", path, lineno)
                try:
                    col = int(parts[0])
                except ValueError:
                    raise ArffError(f"bad sparse index {parts[0]!r}", path, lineno) from None
                if not 0 <= col < width:
                    raise ArffError(f"sparse index {col} outside {width} attributes", path, lineno)
                table[r, col] = _parse_value(parts[1], kinds[col], path, lineno, names[col])
        else:
            toks = _split_csv(line)
            if len(toks) != width:
                raise ArffError(f"row has {len(toks)} values, header declares {width}",
                                path, lineno)
            for col, tok in enumerate(toks):
                table[r, col] = _parse_value(tok, kinds[col], path, lineno, names[col])

    if not rows:
        raise ArffError("no data rows", path)
    return Dataset(table[:, feat_idx], table[:, label_idx].astype(np.int8), relation,
                   tuple(names[i] for i in feat_idx), tuple(names[i] for i in label_idx))


def _quote(name: str) -> str:
    return f"'{name}'" if re.search(r"[\s,{}%'\"]", name) else name


def write_arff(data: Dataset, path, sparse: bool = False):
    """Write features as numeric and labels as trailing {0,1} attributes."""
    out = [f"@relation {_quote(data.name)}", ""]
    out += [f"@attribute {_quote(nm)} numeric" for nm in data.feature_names]
    out += [f"@attribute {_quote(nm)} {{0,1}}" for nm in data.label_names]
    out += ["", "@data"]
    bits = (data.labels > 0).astype(int)
    for x, yb in zip(data.features, bits):
        vals = [repr(float(v)) for v in x] + [str(b) for b in yb]
        if sparse:
            keep = [f"{i} {v}" for i, v in enumerate(vals) if float(v) != 0.0]
            out.append("{" + ",".join(keep) + "}")
        else:
            out.append(",".join(vals))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def dump_csv(data: Dataset, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.feature_names) + list(data.label_names))
        for x, y in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in x] + [int(v) for v in y])


# -- scaling and folds -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalerParams:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "scale", _frozen(np.asarray(self.scale, dtype=float)))
        if self.mean.shape != self.scale.shape or self.mean.ndim != 1:
            raise ValueError("mean and scale must be vectors of equal length")
        if not np.all(self.scale > 0):
            raise ValueError("scale entries must be positive")


def fit_scaler(X) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    if X.shape[0] > 1:
        scale = X.std(axis=0, ddof=1)
    else:
        scale = np.ones(X.shape[1])
    # constant columns (up to rounding) keep unit scale and become all zero
    flat = ~(scale > 1e-12 * np.maximum(1.0, np.abs(mean)))
    scale[flat] = 1.0
    return ScalerParams(mean, scale)


def apply_scaler(params: ScalerParams, data):
    """Apply the affine map to a Dataset or a raw feature matrix."""
    if isinstance(data, Dataset):
        if data.n != params.mean.size:
            raise ValueError(f"scaler fitted on {params.mean.size} columns, data has {data.n}")
        return data.with_features((data.features - params.mean) / params.scale)
    X = np.asarray(data, dtype=float)
    return (X - params.mean) / params.scale


def standardize(train: Dataset):
    params = fit_scaler(train.features)
    return apply_scaler(params, train), params


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray = field(repr=False)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def folds(self):
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)

    def sizes(self):
        return np.bincount(self.assignment, minlength=self.k)


def k_fold_split(m: int, k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle ``range(m)`` with ``seed`` and deal the indices round-robin into k folds."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > m:
        raise ValueError(f"cannot split {m} instances into {k} folds")
    perm = np.random.default_rng(seed).permutation(m)
    assignment = np.empty(m, dtype=np.int64)
    assignment[perm] = np.arange(m) % k
    return FoldPlan(k, seed, _frozen(assignment))
