"""Kernel-based identification of linear systems with missing output samples.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._core import (  # noqa: F401
    ArmaxModel,
    Dataset,
    Enrichment,
    GenerationError,
    GramMatrix,
    Hyperparameters,
    IllConditionedError,
    ImputationResult,
    KernelSpec,
    OptimizationError,
    PredictorInstabilityError,
    PredictorModel,
    SearchConfig,
    TimeEstimate,
    __version__,
    add_resonance,
    apply_imputation,
    cod_k,
    cod_miss,
    enriched_kernel,
    enriched_rbf_h,
    enrichment_impulse,
    fit_predictor,
    fit_predictor_fixed,
    gram_matrix_rbf,
    gram_matrix_rbf_continuous,
    impulse_response,
    impute,
    impute_continuous,
    kstep_predict,
    kstep_predict_all,
    kstep_predict_true,
    kstep_predict_true_all,
    marginal_likelihood,
    mask_missing,
    optimize_hyperparameters,
    output_kernel_matrix,
    random_armax,
    read_dataset_csv,
    simulate,
    spline_kernel_quadrature,
    spline_kernel_w,
    stable_spline_imputation,
    stable_spline_k,
    rbf_h_continuous,
    rbf_h_discrete,
    truncated_kernel_gram,
    white_noise_inputs,
    write_dataset_csv,
)
