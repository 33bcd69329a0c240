"""Constructions turning one kind of closeness witness into another."""
from .bm_gadget import (
    BMGadget, ExtractionResult, bm_gadget, bm_gadget_pull, bm_gadget_push, choose_constants,
    induced_vertex_map, vec_degree_audit,
)
from .kadets import (
    KadetsGadget, KadetsPullReport, case_distortions, kadets_gadget, kadets_pull, kadets_push,
    sign_sum_audit, symmetric_sample,
)
from .renorm import permutation_operator, renorm_build, renorm_push
from .suspension import HLBound, Levels, PullReport, hl_pull, hl_push, suspend, suspend_pull, suspend_push
from .unitize import LargeScaleLip, unitize, unitize_pull

__all__ = [
    "BMGadget", "ExtractionResult", "bm_gadget", "bm_gadget_pull", "bm_gadget_push", "choose_constants",
    "induced_vertex_map", "vec_degree_audit", "KadetsGadget", "KadetsPullReport", "case_distortions",
    "kadets_gadget", "kadets_pull", "kadets_push", "sign_sum_audit", "symmetric_sample",
    "permutation_operator", "renorm_build", "renorm_push", "HLBound", "Levels", "PullReport", "hl_pull",
    "hl_push", "suspend", "suspend_pull", "suspend_push", "LargeScaleLip", "unitize", "unitize_pull",
]
