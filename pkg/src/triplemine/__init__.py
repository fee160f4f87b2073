"""Unsupervised commonsense triple scoring with masked-LM mutual information."""

from .backends import (
    MASK,
    BackendDescriptor,
    CachingBackend,
    LookupBackend,
    MaskedQuery,
    RemoteBackend,
    ScoreCache,
    TokenProbability,
    cache_key,
    make_lookup_backend,
)
from .coherency import RankedCandidates, select_best
from .core import (
    CANDIDATE_TSV,
    CKBC_TSV,
    LabeledTriple,
    Triple,
    normalize_surface,
    parse_triple_line,
    read_triple_file,
    relation_registry,
)
from .estimators import (
    GaussianMixture1D,
    PmiScorer,
    SentenceGenerator,
    TripleValidityClassifier,
)
from .mixture import (
    LambdaSearchResult,
    MixtureModel,
    aic,
    classify_by_mixture,
    f1_score,
    fit_gmm_em,
    tune_lambda_grid,
)
from .morpho import (
    LexiconTagger,
    PhraseVariant,
    PosTag,
    Transform,
    TransformKind,
    apply_transform,
    enumerate_variants,
    tag_prefix,
)
from .pipeline import (
    RunConfig,
    RunReport,
    export_report,
    run_score,
    run_task1,
    run_task2,
    sample_negatives,
    stratified_sample,
)
from .pmi import (
    GreedyTrace,
    PmiScore,
    SpanRoles,
    greedy_span_loglik,
    locate_spans,
    recombine,
    score_pmi,
)
from .sentences import (
    GENERATION_MODES,
    CandidateSentence,
    Template,
    TemplateRegistry,
    enumerate_candidates,
    generate_concatenation,
    generate_deterministic,
    render,
)

__version__ = "0.1.0"
