"""Exception types shared across the package.

Every error carries a machine-readable ``code`` and a ``context`` dict so the
CLI can report it as JSON on stderr.
"""
from __future__ import annotations


class FragdynError(Exception):
    code = "error"

    def __init__(self, message: str = "", **context):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.context = context

    def as_dict(self) -> dict:
        return {"code": self.code, "message": self.message,
                "context": {k: _jsonable(v) for k, v in self.context.items()}}


def _jsonable(v):
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return str(v)


def _make(name: str, code: str) -> type:
    return type(name, (FragdynError,), {"code": code})


# moebius
NotDiskAutomorphism = _make("NotDiskAutomorphism", "not_disk_automorphism")
DegenerateGeodesic = _make("DegenerateGeodesic", "degenerate_geodesic")

# circle systems
NotMarkov = _make("NotMarkov", "not_markov")
NonPeriodicTail = _make("NonPeriodicTail", "non_periodic_tail")
NotParabolic = _make("NotParabolic", "not_parabolic")
CombinatorialMismatch = _make("CombinatorialMismatch", "combinatorial_mismatch")
InsufficientDepth = _make("InsufficientDepth", "insufficient_depth")

# interval combinatorics
UnrealizableRatio = _make("UnrealizableRatio", "unrealizable_ratio")
NotGeneralizedDyadic = _make("NotGeneralizedDyadic", "not_generalized_dyadic")
BlueSplitUnavailable = _make("BlueSplitUnavailable", "blue_split_unavailable")
AllBlue = _make("AllBlue", "all_blue")
TypeMismatch = _make("TypeMismatch", "type_mismatch")
NotRInterval = _make("NotRInterval", "not_r_interval")
Not3Adic = _make("Not3Adic", "not_3adic")
InvalidInvariance = _make("InvalidInvariance", "invalid_invariance")

# polynomial models
NotEscaped = _make("NotEscaped", "not_escaped")
RayTraceStall = _make("RayTraceStall", "ray_trace_stall")
LaminationUndefined = _make("LaminationUndefined", "lamination_undefined")
UnknownModel = _make("UnknownModel", "unknown_model")

# puzzles
DisconnectedChain = _make("DisconnectedChain", "disconnected_chain")
KernelConstraintViolation = _make("KernelConstraintViolation", "kernel_constraint_violation")
NotARefinement = _make("NotARefinement", "not_a_refinement")
TypeViolation = _make("TypeViolation", "type_violation")
NotExpanding = _make("NotExpanding", "not_expanding")
UnrealizableSpec = _make("UnrealizableSpec", "unrealizable_spec")

# groups
SolverDiverged = _make("SolverDiverged", "solver_diverged")
CompactSignature = _make("CompactSignature", "compact_signature")
DisconnectedNodalData = _make("DisconnectedNodalData", "disconnected_nodal_data")
InvalidRepresentatives = _make("InvalidRepresentatives", "invalid_representatives")

# schwarz
UnivalenceScreenFailed = _make("UnivalenceScreenFailed", "univalence_screen_failed")
NotInOmega = _make("NotInOmega", "not_in_omega")
MultiRoot = _make("MultiRoot", "multi_root")

# trees
CycleDetected = _make("CycleDetected", "cycle_detected")
DepthMismatch = _make("DepthMismatch", "depth_mismatch")
