"""
Rings need a kernel
===================

Each label is a ring around the origin.  A linear slab is a band across
the plane, so it cannot fit a ring; with an rbf kernel the two level sets
bend into a circle.
"""

from mlpsvm import Hyperparams, KernelSpec, fit, predict, standardize
from mlpsvm.dataset import apply_scaler
from mlpsvm.metrics import hamming_loss
from mlpsvm.synth import generate_annuli

train, test = generate_annuli(800, seed=0), generate_annuli(800, seed=1)
tr, scaler = standardize(train)
te = apply_scaler(scaler, test)

for name, params in [("linear", Hyperparams(C1=10.0, C2=0.1)),
                     ("rbf", Hyperparams(C1=100.0, C2=0.01, kernel=KernelSpec("rbf", gamma=1.0)))]:
    model = fit(tr, params)
    print(f"{name:6s} hamming loss {hamming_loss(predict(model, te.features), te.labels):.3f}")
