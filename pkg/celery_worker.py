#!/usr/bin/env python3
"""
Celery Worker Entry Point

Run this file to start a Celery worker that classifies sweep grid points.
Set CUSPIDAL_ATLAS_EAGER=false and CELERY_BROKER_URL on both the worker and
the sweep command.

Usage:
    python celery_worker.py worker --loglevel=info

Or via Celery CLI:
    celery -A celery_worker.celery worker --loglevel=info
"""

from cuspidal_atlas.celery_app import celery
import cuspidal_atlas.jobs  # Import module to register tasks

if __name__ == '__main__':
    celery.start()
