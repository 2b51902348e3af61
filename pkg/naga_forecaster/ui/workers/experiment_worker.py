"""
Worker pool for training jobs.

Jobs are fully isolated (own model, random streams and optimizer state), so
they can run in separate processes; results come back in submission order.
"""

import os
from multiprocessing import Pool

from config import DEFAULT_THREADS, THREADS_ENV_VAR

from ..output_handlers import display_warning_message


def resolve_thread_count(requested=None):
    """
    Number of worker processes to use.

    Args:
        requested (int, optional): Explicit count; otherwise NAGA_THREADS

    Returns:
        int: At least 1
    """
    if requested is None:
        raw = os.environ.get(THREADS_ENV_VAR, "").strip()
        if not raw:
            return DEFAULT_THREADS
        try:
            requested = int(raw)
        except ValueError:
            display_warning_message(f"ignoring non-integer {THREADS_ENV_VAR}={raw!r}")
            return DEFAULT_THREADS
    return max(1, int(requested))


class ExperimentWorker:
    """Runs training jobs sequentially or on a process pool."""

    def __init__(self, threads=None, progress_callback=None):
        self.threads = resolve_thread_count(threads)
        self.progress_callback = progress_callback

    def _report(self, done, total):
        if self.progress_callback is not None:
            self.progress_callback(done, total)

    def run(self, fn, jobs):
        """
        Apply ``fn`` to every job.

        Args:
            fn (callable): Picklable module-level function
            jobs (list): Job descriptions

        Returns:
            list: One result per job, in job order
        """
        jobs = list(jobs)
        results = []
        if self.threads == 1 or len(jobs) <= 1:
            for job in jobs:
                results.append(fn(job))
                self._report(len(results), len(jobs))
            return results

        with Pool(min(self.threads, len(jobs))) as pool:
            for result in pool.imap(fn, jobs):
                results.append(result)
                self._report(len(results), len(jobs))
        return results
