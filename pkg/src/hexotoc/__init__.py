"""Exact-dynamics OTOC and entanglement toolkit for finite Bose-Hubbard lattices.

Attribute access is lazy (PEP 562): importing the bare package, as the CLI
entry point does, must not pull in numpy before thread environment variables
are settled.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "lattice": (
        "LatticeGraph",
        "OperatorSitePair",
        "PresetEntry",
        "build_preset",
        "graph_distance",
        "load_graph",
        "max_distance_pair",
        "preset_entry",
        "preset_registry",
    ),
    "fock": (
        "FockBasis",
        "QuantumState",
        "annihilation_matrix",
        "apply_annihilation",
        "apply_creation",
        "basis_state",
        "enumerate_basis",
        "sector_dimension",
        "untruncated_dimension",
    ),
    "hamiltonian": (
        "BoseHubbardParams",
        "SparseHamiltonian",
        "build_hamiltonian",
    ),
    "propagator": (
        "KrylovConfig",
        "PropagationError",
        "evolve",
        "krylov_step",
    ),
    "observables": (
        "OTOCSeries",
        "SectorSet",
        "TimeGrid",
        "compute_otoc_series",
        "default_grid",
        "departure_time",
        "otoc_table",
    ),
    "entropy": (
        "AncillaLatticeState",
        "BoundCheckReport",
        "SubsystemPartition",
        "compute_mi_series",
        "compute_tmi_series",
        "entangled_ancilla_state",
        "equal_bipartition",
        "evolve_ancilla_state",
        "mutual_information",
        "otoc_mi_bound_check",
        "reduced_density_matrix",
        "ring_tmi_partition",
        "subsystem_entropy",
        "tripartite_mutual_information",
        "von_neumann_entropy",
    ),
    "fitting": (
        "FitModel",
        "FitResult",
        "default_window",
        "first_local_minimum",
        "fit_model",
        "front_window",
        "model_eval",
        "model_select",
        "regime_classify",
        "result_to_json",
        "threshold_crossing",
    ),
    "special": (
        "erfc",
        "erfcx",
    ),
}

_ATTR_TO_MODULE = {
    name: module for module, names in _EXPORTS.items() for name in names
}

__all__ = ["__version__", *sorted(_ATTR_TO_MODULE)]


def __getattr__(name: str):
    module = _ATTR_TO_MODULE.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(import_module(f".{module}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
