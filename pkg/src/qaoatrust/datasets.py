"""Benchmark graph sets, reference angles, and their line-oriented file format."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from .config import ExperimentConfig
from .engine import canonicalize_angles, expectation
from .graphs import Family, Graph, generate, get_family
from .neldermead import nelder_mead
from .utils import derive_seed, make_rng

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
DATASET_HEADER = "# qaoatrust dataset: family n seed m i1 j1 ... [target angles]"


@dataclass(frozen=True)
class GraphRecord:
    """
    One benchmark instance.

    Parameters
    ----------
    instance : str
        Identifier ``<split>-<family>-n<n>-<index>``.
    split : str
        ``train``, ``val`` or ``test``.
    graph : Graph
    target : np.ndarray, optional
        Reference angles found by multi-start optimization.
    """

    instance: str
    split: str
    graph: Graph
    target: Optional[np.ndarray] = None

    @property
    def family(self) -> Family:
        assert self.graph.family is not None
        return self.graph.family


def instance_id(split: str, family: Family, n: int, index: int) -> str:
    return f"{split}-{family.value}-n{n}-{index:03d}"


def _split_records(
    split: str, families: Iterable[Family], sizes: Iterable[int], count: int, master: int
) -> list[GraphRecord]:
    records = []
    for n in sizes:
        for family in families:
            for index in range(count):
                seed = derive_seed(master, split, family.value, n, index)
                records.append(
                    GraphRecord(
                        instance=instance_id(split, family, n, index),
                        split=split,
                        graph=generate(family, n, seed),
                    )
                )
    return records


def gen_dataset(config: ExperimentConfig) -> Dict[str, list[GraphRecord]]:
    """
    Generate the train, validation and test graphs.

    Train and validation graphs have ``config.train_size`` vertices; the test
    split has ``config.test_per_family`` graphs per family for every size.

    Returns
    -------
    dict
        Records per split.
    """
    families = [get_family(name) for name in config.families]
    dataset = {
        "train": _split_records("train", families, [config.train_size], config.train_per_family, config.seed),
        "val": _split_records("val", families, [config.train_size], config.val_per_family, config.seed),
        "test": _split_records("test", families, config.sizes, config.test_per_family, config.seed),
    }
    logger.info(
        "Generated %s graphs",
        ", ".join(f"{len(records)} {split}" for split, records in dataset.items()),
    )
    return dataset


def format_record(record: GraphRecord) -> str:
    g = record.graph
    fields = [g.family.value if g.family else "-", str(g.n), str(g.seed), str(g.m)]
    fields.extend(f"{i} {j}" for i, j in g.edges)
    if record.target is not None:
        fields.extend(repr(float(x)) for x in record.target)
    return " ".join(fields)


def parse_record(line: str, split: str, index_by_group: Dict[tuple, int]) -> GraphRecord:
    tokens = line.split()
    if len(tokens) < 4:
        raise ValueError(f"Dataset line too short: {line!r}")
    family = get_family(tokens[0])
    n, seed, m = int(tokens[1]), int(tokens[2]), int(tokens[3])
    edge_tokens = tokens[4 : 4 + 2 * m]
    if len(edge_tokens) != 2 * m:
        raise ValueError(f"Dataset line declares {m} edges but lists fewer: {line!r}")
    edges = [(int(edge_tokens[2 * e]), int(edge_tokens[2 * e + 1])) for e in range(m)]
    extra = tokens[4 + 2 * m :]
    target = np.array([float(x) for x in extra]) if extra else None
    group = (family, n)
    index = index_by_group.get(group, 0)
    index_by_group[group] = index + 1
    return GraphRecord(
        instance=instance_id(split, family, n, index),
        split=split,
        graph=Graph.from_edges(n, edges, family=family, seed=seed),
        target=target,
    )


def write_records(records: Sequence[GraphRecord], path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [DATASET_HEADER] + [format_record(r) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_records(path: Union[str, Path], split: str) -> list[GraphRecord]:
    """
    Read one split file.

    Raises
    ------
    ValueError
        On malformed lines (with the line number).
    """
    records = []
    index_by_group: Dict[tuple, int] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            records.append(parse_record(line, split, index_by_group))
        except ValueError as exc:
            raise ValueError(f"{path}:{number}: {exc}") from None
    return records


def write_dataset(dataset: Dict[str, Sequence[GraphRecord]], directory: Union[str, Path]) -> None:
    for split, records in dataset.items():
        write_records(records, Path(directory) / f"{split}.txt")


def read_dataset(directory: Union[str, Path]) -> Dict[str, list[GraphRecord]]:
    """
    Read every split of a dataset directory.

    Raises
    ------
    FileNotFoundError
        If a split file is missing.
    """
    directory = Path(directory)
    dataset = {}
    for split in SPLITS:
        path = directory / f"{split}.txt"
        if not path.is_file():
            raise FileNotFoundError(f"Missing dataset file {path}; run 'qaoatrust generate' first")
        dataset[split] = read_records(path, split)
    return dataset


def require_targets(records: Sequence[GraphRecord]) -> None:
    """Raise ``ValueError`` if any record lacks reference angles."""
    missing = [r.instance for r in records if r.target is None]
    if missing:
        raise ValueError(
            f"{len(missing)} records have no target angles (first: {missing[0]}); run 'qaoatrust targets' first"
        )


def find_target(
    g: Graph, restarts: int = 8, iters: int = 200, seed: int = 0, p: int = 2
) -> np.ndarray:
    """
    Best of ``restarts`` unconstrained Nelder-Mead runs on the exact objective.

    The first restart starts at ``theta = 0`` so the result is never worse
    than ``m / 2``; the others start uniformly in ``[-pi, pi]^{2p}``. The
    result is a local optimum in canonical form.
    """
    if restarts < 1:
        raise ValueError(f"Need at least one restart, got {restarts}")
    rng = make_rng(seed, "target-starts")
    best_x, best_f = None, -np.inf
    for restart in range(restarts):
        x0 = np.zeros(2 * p) if restart == 0 else rng.uniform(-np.pi, np.pi, size=2 * p)
        result = nelder_mead(lambda theta: expectation(g, theta), x0, iters)
        if result.fun > best_f:
            best_x, best_f = result.x, result.fun
    return canonicalize_angles(best_x)


def gen_targets(
    records: Sequence[GraphRecord],
    restarts: int = 8,
    iters: int = 200,
    seed: int = 0,
    p: int = 2,
    workers: int = 1,
) -> list[GraphRecord]:
    """
    Attach reference angles to records.

    Each record uses its own stream derived from ``(seed, instance)``, so the
    result does not depend on ``workers``.
    """

    def solve(record: GraphRecord) -> GraphRecord:
        target = find_target(record.graph, restarts, iters, derive_seed(seed, "target", record.instance), p)
        return replace(record, target=target)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(solve, records))
    else:
        out = [solve(r) for r in records]
    logger.info("Computed targets for %d graphs", len(out))
    return out
