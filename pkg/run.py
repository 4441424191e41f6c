#!/usr/bin/env python3
"""
Cuspidal Atlas Entry Point

Logs the startup banner (version, parallelism, task mode, output
directory) and hands the command line to the CLI.

Usage:
    python run.py classify --reference d
    python run.py sweep --table --out atlas_output
"""

import sys
import logging

from cuspidal_atlas.app_config import config, settings
from cuspidal_atlas.cli import main

if __name__ == '__main__':
    logging.basicConfig(level=getattr(logging, config.LOG_LEVEL, logging.INFO),
                        format='%(asctime)s - %(levelname)s - %(message)s')

    # --- Startup Logging ---
    logging.info("=" * 50)
    logging.info(f"--- STARTING CUSPIDAL ATLAS {config.APP_VERSION} ---")
    logging.info("=" * 50)
    logging.info(f"Thread cap: {settings.CUSPIDAL_ATLAS_THREADS}")
    if settings.CUSPIDAL_ATLAS_EAGER:
        logging.info("Celery tasks run in-process (eager mode).")
    else:
        logging.info(f"Celery broker: {settings.CELERY_BROKER_URL}")
    logging.info(f"Default output directory: {config.RUN_DEFAULTS.get('output_dir', 'atlas_output')}")

    sys.exit(main())
