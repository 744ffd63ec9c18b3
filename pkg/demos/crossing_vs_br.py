"""
Overlapping labels: two hyperplanes versus one
==============================================

Label 1 covers the flanks, label 2 the middle strips.  One hyperplane
per label (binary relevance) has to cut label 2 out of the plane and
leaks it onto label 1's far strip.  A slab does not.
"""

import numpy as np

from mlpsvm import Hyperparams, fit, fit_br_baseline, predict, standardize
from mlpsvm.dataset import apply_scaler
from mlpsvm.metrics import hamming_loss
from mlpsvm.synth import crossing_strip, generate_crossing

train = generate_crossing(100, 0.05, seed=0)
test = generate_crossing(100, 0.05, seed=1)
tr, scaler = standardize(train)
te = apply_scaler(scaler, test)

# a small C2 lets the upper hyperplane sit a little loose
ours = predict(fit(tr, Hyperparams(C1=8.0, C2=0.0625)), te.features)
theirs = predict(fit_br_baseline(tr, 1.0), te.features)

print(f"hamming loss  mlpsvm {hamming_loss(ours, te.labels):.3f}"
      f"   br {hamming_loss(theirs, te.labels):.3f}")

# label 2 predicted on the label-1-only strips
strip = crossing_strip(test.features)
pure = np.isin(strip, [0, 3])
print("spurious label 2 on pure label-1 strips:",
      int(np.sum(ours[pure, 1] > 0)), "vs", int(np.sum(theirs[pure, 1] > 0)))
