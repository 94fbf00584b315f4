from __future__ import annotations

import time
from typing import Optional

from schemas.state import CausalityState


def record(state: CausalityState, stage: str, t0: float, error: Optional[BaseException] = None) -> None:
    # Observability: track execution latency and errors per stage
    obs = state.meta.setdefault("observability", [])
    obs.append({
        "stage": stage,
        "latency_s": round(time.time() - t0, 3),
        "error": None if error is None else f"{type(error).__name__}: {error}",
    })
