"""Block OMP over arbitrary label partitions, map pooling and thresholding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionaries import Dictionary


@dataclass
class Reconstruction:
    """Result of one group-sparse solve."""

    coefficients: np.ndarray
    selected_groups: list
    residual_norm: float
    degenerate: bool = False


@dataclass
class HypothesisMap:
    """Pooled reconstruction magnitudes over a hypothesis grid."""

    values: np.ndarray
    bins: tuple = None
    threshold: float = None


def group_norm(x, labels) -> float:
    """Sum of per-group 2-norms (the mixed 2-1 block norm)."""
    x = np.asarray(x)
    labels = np.asarray(labels)
    if x.shape[0] != labels.shape[0]:
        raise ValueError("coefficients and labels must have equal length")
    total = 0.0
    for g in np.unique(labels):
        total += float(np.linalg.norm(x[labels == g]))
    return total


def _group_indices(labels: np.ndarray):
    """Ordered (group id, column index array) pairs."""
    labels = np.asarray(labels)
    order = np.argsort(labels, kind="stable")
    groups = []
    uniq, starts = np.unique(labels[order], return_index=True)
    bounds = list(starts) + [len(labels)]
    for i, g in enumerate(uniq):
        groups.append((int(g), order[bounds[i]:bounds[i + 1]]))
    return groups


def group_energies(matrix: np.ndarray, labels, residual) -> dict:
    """Correlation energy ||A_g^H r||^2 per group (unit columns assumed)."""
    corr = matrix.conj().T @ residual
    power = np.abs(corr) ** 2
    return {g: float(power[idx].sum()) for g, idx in _group_indices(labels)}


BASIS_RANK_CUT = 1e-10


def _group_bases(dictionary: Dictionary):
    """Orthonormal basis of each group's column span, at numerical rank.

    Selection scores groups by the energy the residual projects onto each
    group's column span, which matches the exhaustive single-group
    least-squares argmax. Scoring ``||A_g^H r||^2`` directly instead would
    over-count redundant columns: a group of several near-parallel columns
    accumulates the same correlation many times and can outrank a group
    that actually fits the residual better.

    The rank cut here is near machine precision, far looser than the
    refit's coefficient truncation: dropping genuinely spanned (if weak)
    directions would give groups unequal ranks, and a higher-rank group
    soaks up proportionally more noise energy, biasing selection toward it
    on noise-dominated residuals. Bases are cached on the dictionary
    object, which is reused across solves.
    """
    cache = getattr(dictionary, "_basis_cache", None)
    if cache is not None:
        return cache
    ids, blocks, sizes = [], [], []
    for g, idx in _group_indices(dictionary.labels):
        sub = dictionary.matrix[:, idx]
        if sub.shape[1] == 1:
            q = sub / np.linalg.norm(sub)
        else:
            u, s, _ = np.linalg.svd(sub, full_matrices=False)
            keep = s > (s[0] * BASIS_RANK_CUT if s.size else 0.0)
            q = u[:, keep]
        ids.append(g)
        blocks.append(q)
        sizes.append(q.shape[1])
    stacked = np.concatenate(blocks, axis=1)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    cache = (tuple(ids), stacked, offsets)
    object.__setattr__(dictionary, "_basis_cache", cache)
    return cache


def _projection_energies(bases, residual) -> dict:
    """Residual energy captured by each group's span, in one matmul."""
    ids, stacked, offsets = bases
    power = np.abs(stacked.conj().T @ residual) ** 2
    sums = np.add.reduceat(power, offsets)
    return dict(zip(ids, sums.tolist()))


def _ls_refit(matrix, y, support, cond_limit):
    """Minimum-norm least-squares fit over the support columns.

    Rank-deficient supports are legitimate here: a group holding one
    hypothesis for several reflection-coefficient values spans fewer
    dimensions than it has columns. Singular directions below 1/cond_limit
    of the leading singular value are truncated; keeping them would admit
    near-null directions with enormous cancelling coefficients that
    dominate any magnitude-pooled map while adding nothing to the fit.
    """
    sub = matrix[:, support]
    coef, _, _, _ = np.linalg.lstsq(sub, y, rcond=1.0 / cond_limit)
    residual = y - sub @ coef
    return coef, float(np.linalg.norm(residual))


def bomp(y, dictionary: Dictionary, k: int = None, eps: float = None,
         cond_limit: float = 1e2) -> Reconstruction:
    """Block Orthogonal Matching Pursuit.

    Repeatedly selects the group whose column span captures the most
    residual energy (equivalently, the exhaustive single-group
    least-squares argmax), refits jointly over all selected groups, and
    updates the residual. Stops after `k` groups, or once the residual norm
    drops below `eps * ||y||`. Groups that fail to reduce the residual
    (e.g. duplicates of already-selected columns) are skipped and flagged.
    """
    if k is None and eps is None:
        raise ValueError("need a sparsity k or a residual threshold eps")
    if eps is not None and not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    y = np.asarray(y, dtype=complex)
    A = dictionary.matrix
    if A.shape[0] != y.shape[0]:
        raise ValueError("row count of the dictionary must match len(y)")
    groups = dict(_group_indices(dictionary.labels))
    bases = _group_bases(dictionary)
    y_norm = float(np.linalg.norm(y))
    x = np.zeros(A.shape[1], dtype=complex)
    selected, skipped = [], set()
    degenerate = False
    residual = y.copy()
    res_norm = y_norm
    max_iter = k if k is not None else len(groups)

    while len(selected) < max_iter:
        if eps is not None and res_norm <= eps * y_norm:
            break
        if res_norm <= 1e-12 * max(y_norm, 1.0):
            break
        energies = _projection_energies(bases, residual)
        for g in selected:
            energies.pop(g, None)
        for g in skipped:
            energies.pop(g, None)
        if not energies:
            break
        ranked = sorted(energies, key=energies.get, reverse=True)
        if energies[ranked[0]] <= 1e-24:
            break
        fitted = False
        for g in ranked:
            support = np.concatenate([groups[h] for h in selected + [g]])
            coef, res_new = _ls_refit(A, y, support, cond_limit)
            if res_new < res_norm - 1e-12 * max(y_norm, 1.0):
                selected.append(g)
                x[:] = 0.0
                x[support] = coef
                residual = y - A[:, support] @ coef
                res_norm = res_new
                fitted = True
                break
            # group adds nothing (e.g. duplicates of selected columns)
            degenerate = True
            skipped.add(g)
        if not fitted:
            break

    return Reconstruction(coefficients=x, selected_groups=selected,
                          residual_norm=res_norm, degenerate=degenerate)


def bomp_fused(ys, dictionaries, k: int = None, eps: float = None,
               cond_limit: float = 1e2) -> Reconstruction:
    """BOMP over a block-diagonal system without materializing it.

    Equivalent to assembling the systems block-diagonally with tiled labels
    (the shared group support couples all blocks) and running :func:`bomp`;
    the least-squares refit decomposes per block.
    """
    if k is None and eps is None:
        raise ValueError("need a sparsity k or a residual threshold eps")
    ys = [np.asarray(y, dtype=complex) for y in ys]
    mats = [d.matrix for d in dictionaries]
    labels = dictionaries[0].labels
    group_idx = dict(_group_indices(labels))
    for d in dictionaries[1:]:
        if not np.array_equal(d.labels, labels):
            raise ValueError("fused systems must share one label vector")
    block_bases = [_group_bases(d) for d in dictionaries]
    y_norm = float(np.sqrt(sum(np.linalg.norm(y) ** 2 for y in ys)))
    n_cols = mats[0].shape[1]
    xs = [np.zeros(n_cols, dtype=complex) for _ in ys]
    residuals = [y.copy() for y in ys]
    res_norm = y_norm
    selected, skipped = [], set()
    degenerate = False
    max_iter = k if k is not None else len(group_idx)

    while len(selected) < max_iter:
        if eps is not None and res_norm <= eps * y_norm:
            break
        if res_norm <= 1e-12 * max(y_norm, 1.0):
            break
        energies = {}
        for bases, r in zip(block_bases, residuals):
            for g, e in _projection_energies(bases, r).items():
                energies[g] = energies.get(g, 0.0) + e
        for g in list(selected) + list(skipped):
            energies.pop(g, None)
        if not energies or max(energies.values()) <= 1e-24:
            break
        ranked = sorted(energies, key=energies.get, reverse=True)
        fitted = False
        for g in ranked:
            support = np.concatenate([group_idx[h] for h in selected + [g]])
            fits = [_ls_refit(A, y, support, cond_limit)
                    for A, y in zip(mats, ys)]
            res_new = float(np.sqrt(sum(r ** 2 for _, r in fits)))
            if res_new < res_norm - 1e-12 * max(y_norm, 1.0):
                selected.append(g)
                for i, (A, y, (c, _)) in enumerate(zip(mats, ys, fits)):
                    xs[i][:] = 0.0
                    xs[i][support] = c
                    residuals[i] = y - A[:, support] @ c
                res_norm = res_new
                fitted = True
                break
            degenerate = True
            skipped.add(g)
        if not fitted:
            break

    return Reconstruction(coefficients=np.concatenate(xs),
                          selected_groups=selected, residual_norm=res_norm,
                          degenerate=degenerate)


def doa_map(coefficient_vectors, bins=None) -> HypothesisMap:
    """Sum of coefficient moduli per hypothesis index across measurements."""
    vectors = [np.asarray(x) for x in coefficient_vectors]
    n = vectors[0].shape[0]
    for x in vectors[1:]:
        if x.shape[0] != n:
            raise ValueError("coefficient vectors live on different grids")
    values = np.sum([np.abs(x) for x in vectors], axis=0)
    return HypothesisMap(values=values, bins=bins)


def height_map(x, nh: int, naz: int, nrho: int,
               pooling: str = "mean") -> np.ndarray:
    """Pool |x| over the rho axis of a height-dictionary coefficient vector.

    Returns an (naz, nh) array; entry (j, i) is the pooled magnitude for
    height bin i at detected azimuth j.
    """
    x = np.asarray(x)
    if x.shape[0] != nh * naz * nrho:
        raise ValueError(f"expected {nh * naz * nrho} coefficients, "
                         f"got {x.shape[0]}")
    mags = np.abs(x).reshape(nrho, naz, nh)
    if pooling == "mean":
        return mags.mean(axis=0)
    if pooling == "max":
        return mags.max(axis=0)
    raise ValueError(f"unknown pooling {pooling!r}")


def declare(hmap: HypothesisMap, gamma: float):
    """All bins whose pooled magnitude exceeds gamma.

    Returns a list of (bin index or bin metadata, magnitude) pairs.
    """
    if gamma < 0:
        raise ValueError("threshold must be nonnegative")
    values = np.asarray(hmap.values)
    out = []
    for idx in np.flatnonzero(values > gamma):
        bin_id = hmap.bins[idx] if hmap.bins is not None else int(idx)
        out.append((bin_id, float(values[idx])))
    return out
