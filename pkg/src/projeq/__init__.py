"""Projectively equivariant networks from character-twisted invariant subspaces.

The package is organized in layers:

* :mod:`projeq.linalg` -- dense real/complex kernels (nullspaces, column
  spaces, Kronecker products) with strict field discipline.
* :mod:`projeq.groups` -- finite groups as Cayley tables, their character
  groups and commutator subgroups.
* :mod:`projeq.reps` -- linear representations as explicit matrix tables.
* :mod:`projeq.invariants` -- solvers for twisted invariance problems and
  verifiers for the structural theorems they satisfy.
* :mod:`projeq.su2` -- unit quaternions, irreps of SU(2) up to l = 2,
  Clebsch-Gordan tables and spinor utilities.
* :mod:`projeq.charnet`, :mod:`projeq.vierernet`, :mod:`projeq.spinornet`
  -- the network architectures.
* :mod:`projeq.autodiff`, :mod:`projeq.train`, :mod:`projeq.data` -- a
  small reverse-mode engine, optimizers, losses and dataset generators.
* :mod:`projeq.cli` -- the ``projeq`` command line front end.
"""

from projeq.groups import (
    FiniteGroup,
    Character,
    Subgroup,
    make_cyclic,
    make_vierer,
    make_symmetric,
    character_group,
    commutator_subgroup,
    is_perfect,
    char_mul,
)
from projeq.reps import (
    LinearRep,
    rep_cyclic_shift,
    rep_flip_image,
    rep_permutation_tensor,
    rep_twist,
    rep_hom,
    rep_direct_sum,
    rep_tensor,
)
from projeq.invariants import (
    InvariantBasis,
    isotypic_projector,
    invariant_basis,
    invariant_basis_nullspace,
    equivariant_basis,
    projective_invariants,
    commutator_invariants,
    verify_sign_tensor,
)

__version__ = "0.1.0"
