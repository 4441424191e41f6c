"""
JSON-lines checkpoint of completed sweep points
"""

import os
import json
import logging
import threading


class CheckpointDB:
    """Thread-safe, dict-like store of completed rows, one JSON object per line."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._rows = {}
        if os.path.exists(path):
            self._load()

    def _load(self):
        with open(self.path, "r") as f:
            for n, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    self._rows[str(row["key"])] = row["value"]
                except (json.JSONDecodeError, KeyError):
                    # a partially written last line from an interrupted run
                    logging.warning(f"Checkpoint {self.path}: skipping unreadable line {n}")
        logging.info(f"Checkpoint {self.path}: {len(self._rows)} completed rows loaded")

    def __setitem__(self, key, value):
        """Stores the row and appends it to the file."""
        key = str(key)
        with self._lock:
            self._rows[key] = value
            with open(self.path, "a") as f:
                f.write(json.dumps({"key": key, "value": value}, sort_keys=True) + "\n")
                f.flush()

    def __getitem__(self, key):
        with self._lock:
            return self._rows[str(key)]

    def __contains__(self, key):
        with self._lock:
            return str(key) in self._rows

    def __len__(self):
        with self._lock:
            return len(self._rows)

    def items(self):
        with self._lock:
            return list(self._rows.items())
