"""Layer-dependent importance sampling for GCN training, with baselines and a variance lab."""

from .errors import (CorruptLaplacianError, DatasetError, DivergenceError, GraphError,
                     LadiesError)
from .graph import (Laplacian, SparseGraph, build_graph, column_sq_norms, neighbor_union,
                    normalized_laplacian, select_rows)
from .samplers import (BatchPlan, LayerPlan, SamplerConfig, SketchDiag, fastgcn_sample,
                       full_batch_plan, ladies_sample, neighbor_sample, row_normalize,
                       sample_batch)
from .model import (AdamState, GcnModel, adam_step, forward_exact, forward_sampled,
                    init_weights, load_model, loss_and_grad, save_model)
from .data import (Dataset, SyntheticSpec, degree_stats, generate, load_dataset,
                   write_dataset)
from .variance import (ComplexityEstimate, VarianceReport, complexity_estimate,
                       empirical_variance, fastgcn_variance, graphsage_variance,
                       ladies_variance_bound, lemma1_closed_form, measure_actuals,
                       vrgcn_variance)
from .train import (RunMetrics, TrainConfig, micro_f1, run_benchmark, run_repetitions,
                    run_variance_study, train)

__version__ = "0.1.0"
