"""metrics.csv reader for plotting scripts.

The column order is fixed; plotting code depends on these names.
"""

import csv

METRICS_COLUMNS = (
    "step",
    "mean_return",
    "entropy",
    "entropy_variance",
    "update_kl",
    "clip_fraction",
    "mean_conformal_factor",
    "max_embedding_norm",
    "fc_grad_norm",
    "actor_grad_norm",
    "value_loss",
    "policy_loss",
)


def load_metrics(path):
    """Return {column: list of values}; raises ValueError on a header mismatch."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader, ()))
        if header != METRICS_COLUMNS:
            raise ValueError(f"{path}: unexpected header {','.join(header)}")
        cols = {name: [] for name in METRICS_COLUMNS}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(METRICS_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(METRICS_COLUMNS)} fields, got {len(row)}")
            cols["step"].append(int(row[0]))
            for name, value in zip(METRICS_COLUMNS[1:], row[1:]):
                cols[name].append(float(value))
    return cols
