"""Deterministic compressed-sensing matrices from k-th power residues modulo a prime."""

__version__ = "0.1.0"

from .characters import (
    GaussIdentityCheck,
    MultCharSpec,
    additive_char,
    gauss_sum,
    mult_char,
    power_gauss_sum,
    verify_gauss_identity,
)
from .field import (
    PrimeField,
    ResidueSet,
    build_field,
    divisors,
    is_prime,
    kth_power_residues,
    primitive_root,
)
from .matrix import (
    SensingMatrix,
    Variant,
    build_matrix,
    build_paley_matrix,
    coherence,
    compression_ratio,
    inner_product,
    read_matrix,
    welch_bound,
    write_matrix,
)
from .primes import primes_with_factor_in_range, shifted_prime_density_report, sieve_primes
from .recovery import (
    iht_recover,
    measure,
    omp_recover,
    run_experiment,
    sample_sparse_signal,
)
from .rip import (
    AnalysisParams,
    character_double_sum,
    check_property_p,
    flat_rip_exhaustive,
    flat_rip_sampled,
    rip_delta_exhaustive,
    rip_from_flat,
    validate_params,
    verify_bound_chain,
    verify_double_sum_bound,
)

