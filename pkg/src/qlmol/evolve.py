"""Real-time propagation and every series the emulation is judged by.

Both simulations run the same way: diagonalize once, rotate the initial
state into the eigenbasis, apply phases.  Molecular-array states are scored
against the gauge model by projecting onto the image of the gauge basis
(without renormalizing — the lost weight is physics, reported as leakage)
and reading site densities, link fluxes, the summed dynamical flux, the
flux-law violation measure G, and the overlap fidelity from the projection.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .qlm import (
    QlmBasis,
    build_qlm_hamiltonian,
    dynamical_gauss_sites,
    gauss_diagonal,
    string_preset,
)
from .dmh import MoleculeArray, enumerate_dmh_basis, build_dmh_hamiltonian, build_embedding, embed_qlm_state

DENSE_CAP_DEFAULT = 20000


def _check_hermitian(H):
    d = H - H.getH()
    if d.nnz:
        scale = max(1.0, np.abs(H.data).max() if H.nnz else 0.0)
        if np.abs(d.data).max() > 1e-12 * scale:
            raise ValueError("hamiltonian is not Hermitian")


def time_evolve(hamiltonian, psi0, times, dense_cap=DENSE_CAP_DEFAULT):
    """States exp(-iHt)ψ0 on the given time grid, one row per time.

    Below ``dense_cap`` the propagator is exact through a full spectral
    decomposition; above it a step-by-step Krylov product is used (times must
    then be non-decreasing).  Rows with t = 0 are the input state verbatim.
    """
    H = sp.csr_matrix(hamiltonian)
    if H.shape[0] != H.shape[1]:
        raise ValueError("hamiltonian must be square")
    psi0 = np.asarray(psi0)
    if psi0.shape != (H.shape[0],):
        raise ValueError("state length does not match the hamiltonian")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state is not normalized")
    _check_hermitian(H)

    times = np.asarray(times, dtype=float)
    dim = H.shape[0]
    if dim <= dense_cap:
        A = H.toarray()
        evals, U = scipy.linalg.eigh(A, overwrite_a=True, driver="evr")
        if np.iscomplexobj(U):
            c = U.conj().T @ psi0.astype(complex)
            M = np.exp(-1j * np.outer(times, evals)) * c
            states = M @ U.T
        else:
            # keep the complex arithmetic in the small [T, dim] factor; a
            # complex copy of U itself would double the peak footprint
            c = (U.T @ psi0.real + 1j * (U.T @ psi0.imag)) if np.iscomplexobj(psi0) else U.T @ psi0
            M = np.exp(-1j * np.outer(times, evals)) * c
            states = M.real @ U.T + 1j * (M.imag @ U.T)
    else:
        if np.any(np.diff(times) < 0):
            raise ValueError("Krylov propagation needs non-decreasing times")
        states = np.empty((times.size, dim), dtype=complex)
        psi = psi0.astype(complex)
        t_prev = 0.0
        for k, t in enumerate(times):
            dt = t - t_prev
            if dt != 0.0:
                psi = expm_multiply(H * (-1j * dt), psi)
            states[k] = psi
            t_prev = t

    exact = times == 0.0
    if exact.any():
        states[exact] = psi0.astype(complex)
    return states


@dataclass(frozen=True)
class EvolutionRecord:
    """Per-time observable series; molecular runs also carry fidelity/leakage."""

    times: np.ndarray
    site_densities: np.ndarray   # [T, 2N]
    link_flux: np.ndarray        # [T, 2N] per-link <S3>, frozen link included
    flux_sum: np.ndarray         # [T] sum over dynamical links only
    gauss_G: np.ndarray          # [T] mean |<G_x>| over the dynamical generators
    fidelity: Optional[np.ndarray] = None
    leakage: Optional[np.ndarray] = None

    @property
    def n_times(self):
        return self.times.size


def _series(probs, basis, times, fidelity=None, leakage=None):
    densities = probs @ basis.occ
    flux = probs @ basis.link_m3
    flux_sum = flux[:, :-1].sum(axis=1)
    sites = dynamical_gauss_sites(basis)
    G = np.zeros(times.size)
    for x in sites:
        G += np.abs(probs @ gauss_diagonal(x, basis))
    G /= len(sites)
    return EvolutionRecord(
        times=times,
        site_densities=densities,
        link_flux=flux,
        flux_sum=flux_sum,
        gauss_G=G,
        fidelity=fidelity,
        leakage=leakage,
    )


def qlm_observables(states, basis, times):
    """Observable series of a gauge-basis evolution."""
    return _series(np.abs(states) ** 2, basis, times)


def fidelity_series(dmh_states, qlm_states, embedding):
    """|<ψ_gauge|ψ_molecular>|² at each time, via the isometric image."""
    if dmh_states.shape[0] != qlm_states.shape[0]:
        raise ValueError("runs have different time grids")
    proj = dmh_states[:, embedding.indices]
    return np.abs(np.sum(qlm_states.conj() * proj, axis=1)) ** 2


def dmh_observables(dmh_states, embedding, qlm_basis, times, qlm_states=None):
    """Molecular-run series, computed on the unrenormalized projection."""
    proj = dmh_states[:, embedding.indices]
    probs = np.abs(proj) ** 2
    leak = 1.0 - probs.sum(axis=1)
    fid = None
    if qlm_states is not None:
        fid = fidelity_series(dmh_states, qlm_states, embedding)
    return _series(probs, qlm_basis, times, fidelity=fid, leakage=leak)


def default_times(t_max=20.0, n=400):
    return np.linspace(0.0, float(t_max), int(n))


def string_state(basis):
    """Unit vector on the fully stretched string configuration."""
    psi = np.zeros(basis.dim)
    psi[basis.index_of(string_preset(basis.S, basis.N))] = 1.0
    return psi


def evolve_qlm_string(qlm_params, times, dense_cap=DENSE_CAP_DEFAULT):
    """String-preset gauge-model run; returns (record, states, basis)."""
    basis = QlmBasis(qlm_params.S, qlm_params.N,
                     frozen_last_link=qlm_params.S,
                     total_fermion_number=qlm_params.N)
    H = build_qlm_hamiltonian(qlm_params, basis)
    psi0 = string_state(basis)
    states = time_evolve(H, psi0, times, dense_cap=dense_cap)
    return qlm_observables(states, basis, times), states, basis


def evolve_emulation(pset, qlm_params, times, dense_cap=DENSE_CAP_DEFAULT,
                     max_neighbor=None):
    """Paired runs from the same preset: target model and its molecular array.

    ``times`` is in model units (1/w for S=1/2 chains, 1/(√2 w) for S=1);
    the molecular run converts through the solved energy scale so both see
    the same physical instants.  ``max_neighbor`` is forwarded to the
    molecular pair sum.  Returns (gauge record, molecular record).
    """
    qlm_rec, qlm_states, qlm_basis = evolve_qlm_string(qlm_params, times, dense_cap)

    array = MoleculeArray.from_parameter_set(pset)
    dmh_basis = enumerate_dmh_basis(array, n_a=pset.n_cells)
    H = build_dmh_hamiltonian(array, dmh_basis, max_neighbor=max_neighbor)
    embedding = build_embedding(qlm_basis, array, dmh_basis)
    psi0 = embed_qlm_state(string_state(qlm_basis), embedding)
    dmh_states = time_evolve(H, psi0, np.asarray(times) / pset.scale, dense_cap=dense_cap)

    dmh_rec = dmh_observables(dmh_states, embedding, qlm_basis, np.asarray(times, float),
                              qlm_states=qlm_states)
    return qlm_rec, dmh_rec


def record_columns(record, site_labels, link_labels):
    """(names, [T, k] matrix) pairing for serialization, fixed column order."""
    names = ["time"]
    cols = [record.times]
    for s, lab in enumerate(site_labels):
        names.append(f"density_{lab}")
        cols.append(record.site_densities[:, s])
    for l, lab in enumerate(link_labels):
        names.append(f"flux_{lab}")
        cols.append(record.link_flux[:, l])
    names += ["flux_sum", "gauss_G"]
    cols += [record.flux_sum, record.gauss_G]
    if record.fidelity is not None:
        names.append("fidelity")
        cols.append(record.fidelity)
    if record.leakage is not None:
        names.append("leakage")
        cols.append(record.leakage)
    return names, np.column_stack(cols)


def write_record_csv(record, path, n_cells, time_unit_s=None):
    """Deterministic CSV (%.12g, no timestamps): byte-identical on rerun.

    ``time_unit_s`` (seconds per model time unit) appends a ``time_s``
    column without disturbing the model-unit schema.
    """
    sites = [f"S{k}" for k in range(1, 2 * n_cells + 1)]
    links = [f"L{k}" for k in range(1, 2 * n_cells + 1)]
    names, data = record_columns(record, sites, links)
    if time_unit_s is not None:
        names.append("time_s")
        data = np.column_stack([data, record.times * time_unit_s])
    np.savetxt(path, data, fmt="%.12g", delimiter=",",
               header=",".join(names), comments="")
