"""Maximum sampling interval search over a monotone certifier."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

DEFAULT_CAP = 10_000


class MonotonicityError(RuntimeError):
    """A certifier accepted some bound after rejecting a smaller one."""


@dataclass
class SearchResult:
    hbar_msi: int | None  # None when certification fails already at hbar = 1
    cap_exhausted: bool
    calls: int
    history: dict[int, bool] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.hbar_msi is not None


def _check_history(history: dict[int, bool]) -> None:
    rejected = [h for h, ok in history.items() if not ok]
    if not rejected:
        return
    first_reject = min(rejected)
    late = sorted(h for h, ok in history.items() if ok and h > first_reject)
    if late:
        raise MonotonicityError(
            f"certifier rejected hbar={first_reject} but accepted {late}")


def _as_bool(verdict) -> bool:
    return bool(getattr(verdict, "certified", verdict))


def linear_search(certifier: Callable[[int], object], cap: int = DEFAULT_CAP,
                  window: int = 1) -> SearchResult:
    """Scan ``hbar = 1, 2, ...`` until the first rejection or ``cap``.

    With ``window > 1`` that many consecutive candidates are evaluated
    concurrently; any acceptance after a rejection inside a window raises
    :class:`MonotonicityError`.
    """
    history: dict[int, bool] = {}
    calls = 0
    h = 1
    pool = ThreadPoolExecutor(window) if window > 1 else None
    try:
        while h <= cap:
            batch = list(range(h, min(h + window, cap + 1)))
            if pool is None:
                results = [_as_bool(certifier(b)) for b in batch]
            else:
                results = [_as_bool(r) for r in pool.map(certifier, batch)]
            calls += len(batch)
            history.update(zip(batch, results))
            _check_history(history)
            if not all(results):
                last_ok = batch[results.index(False)] - 1
                return SearchResult(last_ok if last_ok >= 1 else None, False, calls, history)
            h = batch[-1] + 1
    finally:
        if pool is not None:
            pool.shutdown()
    return SearchResult(cap, True, calls, history)


def exponential_search(certifier: Callable[[int], object], cap: int = DEFAULT_CAP) -> SearchResult:
    """Doubling until a rejection, then bisection; at most ``2 log2(hbar_msi) + 2`` calls."""
    history: dict[int, bool] = {}

    def query(h: int) -> bool:
        ok = _as_bool(certifier(h))
        history[h] = ok
        _check_history(history)
        return ok

    if not query(1):
        return SearchResult(None, False, 1, history)
    lo, hi = 1, 2
    while True:
        if hi >= cap:
            if query(cap):
                return SearchResult(cap, True, len(history), history)
            hi = cap
            break
        if not query(hi):
            break
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if query(mid):
            lo = mid
        else:
            hi = mid
    return SearchResult(lo, False, len(history), history)


def model_certifier(model, gain_mode: str = "exact", **kwargs):
    from .model import certify_model

    return lambda h: certify_model(model, h, gain_mode, **kwargs).certified


def data_certifier(dataset, K, gain_mode: str = "exact", **kwargs):
    from .data import build_qmi, certify_data

    qmi = build_qmi(dataset)
    return lambda h: certify_data(dataset, K, h, gain_mode, qmi=qmi, **kwargs).certified
