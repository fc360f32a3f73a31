"""Bicluster a document-term count matrix: rows and columns at once.

The left singular coefficients cluster documents, the right ones cluster
terms.  Document clusters are scored against planted labels with NMI;
term clusters are scored label-free with PMI coherence computed from
document co-occurrence.
"""

import numpy as np

from aksvd import KernelSpec, auto_gamma, fit_matrix
from aksvd.compat import PcaProjection
from aksvd.downstream import coherence, kmeans, nmi

rng = np.random.default_rng(0)

# 3 topics, each with its own vocabulary slice; sparse Poisson counts
# plus a sprinkle of off-topic words
docs_per, terms_per = 20, 8
rows = []
for b in range(3):
    block = np.zeros((docs_per, 3 * terms_per))
    vocab = slice(b * terms_per, (b + 1) * terms_per)
    on = rng.random((docs_per, terms_per)) < 0.9
    block[:, vocab] = rng.poisson(5.0, (docs_per, terms_per)) * on
    stray = rng.random((docs_per, 3 * terms_per)) < 0.02
    block += stray * rng.poisson(1.0, (docs_per, 3 * terms_per))
    rows.append(block)
A = np.vstack(rows).astype(float)
doc_truth = np.repeat([0, 1, 2], docs_per)
term_truth = np.repeat([0, 1, 2], terms_per)

# rectangular matrix: the column-sample set needs a compatibility projection
spec = KernelSpec.sne(1.5 * auto_gamma(A))
model = fit_matrix(A, spec, rank=4, compat=PcaProjection(), do_center=True)

doc_clusters = kmeans(model.b_phi, 3, seed=0)
term_clusters = kmeans(model.b_psi, 3, seed=1)

print("document NMI vs planted topics:", round(nmi(doc_clusters.labels, doc_truth), 3))
print("term NMI vs planted topics:    ", round(nmi(term_clusters.labels, term_truth), 3))
print()
print("term-cluster PMI coherence (higher = terms co-occur more):")
print("  learned clusters: ", round(coherence(term_clusters.labels, A), 3))
print("  planted clusters: ", round(coherence(term_truth, A), 3))
print("  shuffled clusters:", round(coherence(rng.permutation(term_truth), A), 3))
