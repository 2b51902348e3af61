"""Background execution of training jobs."""
