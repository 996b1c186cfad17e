"""Differentially private sharing of SNP genotype datasets.

Pipeline: encode genotypes into a bit-packed binary matrix, perturb it
with calibrated XOR noise, repair it from public per-SNP statistics,
then quantify the utility loss and the residual membership-inference
risk.  A workspace service and browser dashboard sit on top for data
stewards.
"""

__version__ = "0.1.0"

from .bits import BinaryMatrix
from .ingest import (
    MISSING,
    GenotypeDataset,
    ReferencePanel,
    SnpDescriptor,
    align_to_reference,
    decode_binary,
    encode_binary,
    impute_missing,
    parse_genotype_matrix,
    parse_raw_snp_export,
    parse_reference_panel,
    serialize_genotype_matrix,
    serialize_reference_panel,
)
from .mechanism import (
    BlockPlan,
    BudgetSemantics,
    NoiseMatrix,
    NoiseMode,
    NoiseModel,
    PrivacyBudget,
    budget_per_bit,
    build_correlation_blocks,
    build_independent_model,
    calibrate_markov,
    epsilon_upper_bound,
    flip_probability,
    sample_noise,
    verify_dp_bruteforce,
    xor_apply,
)
from .metrics import (
    UtilityReport,
    avg_point_error,
    avg_sample_error,
    build_utility_report,
    mean_error,
    variance_error,
)
from .attack import AttackReport, allele_frequencies, evaluate_attack, homer_statistic
from .postprocess import debias_frequency, hwe_bit_priors, posterior_one, restore
from .pipeline import RunConfig, RunReport, TradeoffCurve, run_pipeline, tradeoff_curve
from .workspace import Workspace

__all__ = [
    "__version__",
    "MISSING",
    "BinaryMatrix",
    "GenotypeDataset",
    "ReferencePanel",
    "SnpDescriptor",
    "align_to_reference",
    "decode_binary",
    "encode_binary",
    "impute_missing",
    "parse_genotype_matrix",
    "parse_raw_snp_export",
    "parse_reference_panel",
    "serialize_genotype_matrix",
    "serialize_reference_panel",
    "BlockPlan",
    "BudgetSemantics",
    "NoiseMatrix",
    "NoiseMode",
    "NoiseModel",
    "PrivacyBudget",
    "budget_per_bit",
    "build_correlation_blocks",
    "build_independent_model",
    "calibrate_markov",
    "epsilon_upper_bound",
    "flip_probability",
    "sample_noise",
    "verify_dp_bruteforce",
    "xor_apply",
    "UtilityReport",
    "avg_point_error",
    "avg_sample_error",
    "build_utility_report",
    "mean_error",
    "variance_error",
    "AttackReport",
    "allele_frequencies",
    "evaluate_attack",
    "homer_statistic",
    "debias_frequency",
    "hwe_bit_priors",
    "posterior_one",
    "restore",
    "RunConfig",
    "RunReport",
    "TradeoffCurve",
    "run_pipeline",
    "tradeoff_curve",
    "Workspace",
]
