"""
Celery configuration for distributed sweeps.
"""

from celery import Celery

from .app_config import settings


def make_celery():
    """
    Creates and configures a Celery instance. With CUSPIDAL_ATLAS_EAGER set
    (the default) tasks run in the calling process and no broker is needed.
    """
    celery = Celery(
        'cuspidal_atlas',
        broker=settings.CELERY_BROKER_URL,
        backend=settings.CELERY_RESULT_BACKEND
    )

    celery.conf.update(
        task_serializer='json',
        accept_content=['json'],
        result_serializer='json',
        timezone='UTC',
        enable_utc=True,
        task_track_started=True,
        task_always_eager=settings.CUSPIDAL_ATLAS_EAGER,
        task_eager_propagates=True,
        worker_concurrency=settings.CUSPIDAL_ATLAS_THREADS,
    )

    return celery


celery = make_celery()
