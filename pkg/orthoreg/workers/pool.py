import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any

logger = logging.getLogger(__name__)


def run_arms(
    func: Callable[..., Any],
    arms: Sequence[tuple[str, tuple]],
    workers: int = 1,
) -> dict[str, Any]:
    """Run func(*args) for every (label, args) arm.

    Results are keyed by label and ordered as submitted, so a parallel run
    returns exactly what a serial one would. func must be importable at
    module level when workers > 1.
    """
    labels = [label for label, _ in arms]
    if len(set(labels)) != len(labels):
        raise ValueError(f"Arm labels must be unique: {labels}")
    if workers <= 1 or len(arms) <= 1:
        results = {}
        for label, args in arms:
            logger.info("arm_started label=%s", label)
            results[label] = func(*args)
        return results

    logger.info("arms_submitted count=%s workers=%s", len(arms), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {label: executor.submit(func, *args) for label, args in arms}
        return {label: futures[label].result() for label in labels}
