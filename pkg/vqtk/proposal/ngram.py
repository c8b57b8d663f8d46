"""Count-based n-gram proposal model with add-alpha smoothing.

Grids are read in raster order and every grid starts from a fresh context of
``order - 1`` BOS markers. On disk (little-endian)::

    NGRM | version u32 = 1 | order u32 | N u32 | alpha f64 | entries u64
         | entries x ((order - 1) x u32 context, u32 code, u64 count)

BOS is stored as 0xFFFFFFFF. Entries are sorted by (context, code) with BOS
first.
"""
import logging
import math
import struct
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, Field

from vqtk.config import settings
from vqtk.core.formats import FORMAT_VERSION, PathLike, _parse_header, _payload, _read_bytes, _write_bytes
from vqtk.core.types import TokenGrid
from vqtk.errors import DimensionOverflow, EmptyData, FormatError, Truncated, UsageError
from vqtk.proposal.base import BOS, ProposalModel, check_codes

logger = logging.getLogger(__name__)

NGRM_MAGIC = b"NGRM"
_BOS_U32 = 0xFFFFFFFF
_HEADER = struct.Struct("<4s3IdQ")
MAX_ORDER = 64

Context = Tuple[int, ...]
SeedLike = Union[int, np.random.SeedSequence]


class NgramConfig(BaseModel):
    order: int = Field(default_factory=lambda: settings.NGRAM_ORDER, ge=1, le=MAX_ORDER)
    vocab_size: int = Field(ge=1, le=(1 << 32) - 1)
    alpha: float = Field(default_factory=lambda: settings.NGRAM_ALPHA, gt=0.0, allow_inf_nan=False)


class NgramModel(ProposalModel):
    def __init__(self, order: int, vocab_size: int, alpha: float, counts: Dict[Context, Dict[int, int]]):
        super().__init__(vocab_size)
        self.order = order
        self.alpha = alpha
        self.counts = counts
        self.totals = {ctx: sum(row.values()) for ctx, row in counts.items()}
        self._cache: Dict[Context, np.ndarray] = {}

    def context_of(self, history: Sequence[int]) -> Context:
        width = self.order - 1
        if width == 0:
            return ()
        tail = [int(c) for c in history[-width:]]
        return (BOS,) * (width - len(tail)) + tuple(tail)

    def next_token_distribution(self, context: Sequence[int]) -> np.ndarray:
        ctx = self.context_of(context)
        dist = self._cache.get(ctx)
        if dist is None:
            row = self.counts.get(ctx, {})
            dist = np.full(self.vocab_size, self.alpha)
            for code, count in row.items():
                dist[code] += count
            dist /= self.totals.get(ctx, 0) + self.alpha * self.vocab_size
            dist.setflags(write=False)
            self._cache[ctx] = dist
        return dist

    def token_log_prob(self, context: Sequence[int], code: int) -> float:
        ctx = self.context_of(context)
        count = self.counts.get(ctx, {}).get(code, 0)
        return math.log((count + self.alpha) / (self.totals.get(ctx, 0) + self.alpha * self.vocab_size))

    @property
    def entry_count(self) -> int:
        return sum(len(row) for row in self.counts.values())


def _windows(codes: np.ndarray, order: int) -> np.ndarray:
    padded = np.concatenate([np.full(order - 1, BOS, dtype=np.int64), codes])
    return sliding_window_view(padded, order)


def ngram_fit(corpus: Sequence[TokenGrid], cfg: NgramConfig) -> NgramModel:
    """Count (context, code) pairs over the raster order of every grid."""
    if not corpus:
        raise EmptyData("cannot fit an n-gram model on an empty corpus")
    windows = np.concatenate([
        _windows(check_codes(grid.sequence(), cfg.vocab_size), cfg.order) for grid in corpus
    ])
    entries, freq = np.unique(windows, axis=0, return_counts=True)

    counts: Dict[Context, Dict[int, int]] = {}
    for entry, count in zip(entries.tolist(), freq.tolist()):
        counts.setdefault(tuple(entry[:-1]), {})[entry[-1]] = count

    model = NgramModel(cfg.order, cfg.vocab_size, cfg.alpha, counts)
    logger.info(
        f"Fitted order-{cfg.order} n-gram on {len(corpus)} grids / {windows.shape[0]} tokens: "
        f"{len(counts)} contexts, {model.entry_count} entries"
    )
    return model


def ngram_sample(model: ProposalModel, length: int, seed: SeedLike) -> np.ndarray:
    """Ancestral sampling by inverse CDF; identical seeds give identical sequences."""
    if length < 1:
        raise UsageError(f"sample length must be positive, got {length}")
    rng = np.random.default_rng(seed)
    out: List[int] = []
    for _ in range(length):
        cdf = np.cumsum(model.check_distribution(model.next_token_distribution(out)))
        code = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        out.append(min(code, model.vocab_size - 1))
    return np.asarray(out, dtype=np.int64)


def sample_grids(model: ProposalModel, height: int, width: int, count: int, seed: SeedLike) -> List[TokenGrid]:
    """``count`` independent h x w grids, each from its own spawned seed."""
    children = np.random.SeedSequence(seed).spawn(count) if isinstance(seed, int) else seed.spawn(count)
    return [
        TokenGrid(height=height, width=width, codes=ngram_sample(model, height * width, child))
        for child in children
    ]


def sequence_log_prob(model: ProposalModel, sequence: Sequence[int], context: Sequence[int] = ()) -> float:
    """Sum of ln p(z_i | z_1..z_{i-1}), optionally continuing after ``context``."""
    return model.sequence_log_prob(sequence, context)


# MODEL FILES
def _entry_dtype(order: int) -> np.dtype:
    fields = [("code", "<u4"), ("count", "<u8")]
    if order > 1:
        fields.insert(0, ("context", "<u4", (order - 1,)))
    return np.dtype(fields)


def encode_ngram(model: NgramModel) -> bytes:
    entries = np.zeros(model.entry_count, dtype=_entry_dtype(model.order))
    i = 0
    for ctx in sorted(model.counts):
        for code in sorted(model.counts[ctx]):
            if model.order > 1:
                entries["context"][i] = [_BOS_U32 if c == BOS else c for c in ctx]
            entries["code"][i] = code
            entries["count"][i] = model.counts[ctx][code]
            i += 1
    header = _HEADER.pack(NGRM_MAGIC, FORMAT_VERSION, model.order, model.vocab_size, model.alpha, entries.size)
    return header + entries.tobytes()


def save_ngram(model: NgramModel, path: PathLike) -> None:
    _write_bytes(path, encode_ngram(model))


def load_ngram(path: PathLike) -> NgramModel:
    buf = _read_bytes(path)
    where = str(path)
    (order, vocab), _ = _parse_header(buf, NGRM_MAGIC, 2, where)
    if order > MAX_ORDER:
        raise DimensionOverflow(f"order {order} exceeds the supported maximum of {MAX_ORDER}", 8, where)
    if len(buf) < _HEADER.size:
        raise Truncated("header is incomplete", len(buf), where)
    _, _, _, _, alpha, n_entries = _HEADER.unpack_from(buf)
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise FormatError(f"smoothing alpha must be positive and finite, got {alpha}", 16, where)

    entries = _payload(buf, _HEADER.size, n_entries, _entry_dtype(order), where)
    counts: Dict[Context, Dict[int, int]] = {}
    for i, entry in enumerate(entries):
        code = int(entry["code"])
        offset = _HEADER.size + i * entries.dtype.itemsize
        if code >= vocab:
            raise FormatError(f"entry {i} has code {code} outside [0, {vocab})", offset, where)
        ctx: Context = ()
        if order > 1:
            ctx = tuple(BOS if c == _BOS_U32 else int(c) for c in entry["context"])
            if any(c != BOS and c >= vocab for c in ctx):
                raise FormatError(f"entry {i} has a context code outside [0, {vocab})", offset, where)
        counts.setdefault(ctx, {})[code] = int(entry["count"])
    return NgramModel(order, vocab, float(alpha), counts)
