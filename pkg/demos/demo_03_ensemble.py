"""
Blending two heads
==================

Two heads trained from different seeds and widths are combined with fixed
weights 0.75 / 0.25, mirroring the file-level workflow of the command line
tool.
"""

import tempfile
from pathlib import Path

import numpy as np

from vra.featurestore import SplitAssignment
from vra.inference import (EnsembleConfig, average_predictions, ensemble_weighted,
                           predict_repeated, read_predictions, write_predictions)
from vra.metrics import MetricsReport, SetMetrics
from vra.synthetic import make_linear_store
from vra.trainer import TrainConfig, train

work = Path(tempfile.mkdtemp())
store, _, _ = make_linear_store(work / "store", n_videos=300, seed=5, noise=0.2)
ids = store.video_ids
splits = SplitAssignment(ids[:200], ids[240:], ids[200:240], seed=5)
labels = store.labels(splits.test_ids)

heads = {
    "wide": TrainConfig(learning_rate=1e-3, max_epochs=120, seed=1),
    "narrow": TrainConfig(learning_rate=1e-3, max_epochs=120, hidden_dims=(64,), seed=2),
}
for name, cfg in heads.items():
    model, _ = train(cfg, store, splits)
    p = average_predictions(predict_repeated(model, store, splits.test_ids, 10, base_seed=3))
    write_predictions(work / f"{name}.csv", splits.test_ids, p)

###############################################################################
# Prediction files are matched by video id before blending; a reordered or
# partial file is rejected rather than silently misaligned.

ids_a, a = read_predictions(work / "wide.csv")
ids_b, b = read_predictions(work / "narrow.csv")
blend = ensemble_weighted(a, b, EnsembleConfig(0.75, 0.25), ids_a, ids_b)

report = MetricsReport([
    SetMetrics.compute(a, labels, "wide"),
    SetMetrics.compute(b, labels, "narrow"),
    SetMetrics.compute(blend, labels, "blend"),
])
print(report.to_text())
print("blend is between the two:", bool(np.all((blend - np.minimum(a, b)) >= -1e-12)))
