"""
Sweep job management.
- Celery task classifying one grid point
- Thread-pool driver with checkpoint/resume
- Output directory setup
"""

import os
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from .app_config import RunConfig, settings
from .celery_app import celery
from .checkpoint_db import CheckpointDB
from .classifier import SweepGrid, SweepRecord, classify_record
from .kinematics import DesignParams


def setup_directories(output_dir):
    """Creates the output directory; an unusable path is fatal for the command."""
    if not os.path.exists(output_dir):
        os.makedirs(output_dir)
        logging.info(f"Created directory: {output_dir}")
    if not os.access(output_dir, os.W_OK):
        raise PermissionError(f"output directory {output_dir} is not writable")


def checkpoint_key(index, params: DesignParams):
    return f"{index}:{params.d3!r}:{params.r2!r}:{params.d4!r}"


@celery.task(name='cuspidal_atlas.jobs.classify_point_task')
def classify_point_task(index, params, run_config):
    """
    Classifies one grid point. Arguments and result are plain JSON so the
    task can cross a real broker.
    """
    record = classify_record(index, DesignParams(**params), RunConfig(**run_config))
    return record.model_dump(mode="json")


def run_sweep(grid: SweepGrid, run_config: RunConfig, checkpoint_path: Optional[str] = None,
              threads: Optional[int] = None) -> list[SweepRecord]:
    """
    Submits every grid point not already in the checkpoint and waits for the
    results with at most `threads` in flight. Records are returned in grid
    order; completed ones are appended to the checkpoint as they arrive.
    """
    threads = min(threads or run_config.threads or settings.CUSPIDAL_ATLAS_THREADS,
                  settings.CUSPIDAL_ATLAS_THREADS)
    points = grid.params()
    checkpoint = CheckpointDB(checkpoint_path) if checkpoint_path else None
    config_payload = run_config.model_dump(mode="json")

    records = {}
    pending = []
    for index, params in enumerate(points):
        key = checkpoint_key(index, params)
        if checkpoint is not None and key in checkpoint:
            records[index] = SweepRecord(**checkpoint[key])
        else:
            pending.append((index, params, key))
    if checkpoint is not None:
        logging.info(f"Sweep: {len(records)} of {len(points)} points restored from checkpoint")
    logging.info(f"Sweep: classifying {len(pending)} points with {threads} threads")

    def work(item):
        index, params, key = item
        result = classify_point_task.delay(index, params.model_dump(), config_payload).get()
        if checkpoint is not None:
            checkpoint[key] = result
        return index, SweepRecord(**result)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for done, (index, record) in enumerate(pool.map(work, pending), 1):
            records[index] = record
            if done % 10 == 0 or done == len(pending):
                logging.info(f"Sweep: {done}/{len(pending)} points classified")

    failed = sum(1 for r in records.values() if r.status == "failed")
    if failed:
        logging.warning(f"Sweep finished with {failed} failed points")
    return [records[i] for i in sorted(records)]
