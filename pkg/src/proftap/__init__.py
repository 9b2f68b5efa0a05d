"""proftap: can judges tell AI-generated classical Chinese poems from human ones?

The package implements the full evaluation loop: title-conditioned
generation through model adapters, post-processing and anti-plagiarism
screening, randomized blind assignment of the mixed poem pool to judges,
an HTTP rating service, and tie-aware AUC / signed-rank reporting, plus
synthetic judges for validating the whole pipeline without humans.
"""

from .antiplag import LineIndex, MatchEvidence, MatchMode, build_index, find_duplication
from .corpus import (
    Corpus,
    Poem,
    PoemLines,
    Source,
    StructuralFeatures,
    YanClass,
    classify_yan,
    compute_features,
    detect_char_repetition,
    ingest_corpus,
    normalize_text,
    sample_titles,
    segment_lines,
)
from .generation import (
    DEFAULT_PROMPT_TEMPLATE,
    GenerationParams,
    ModelSpec,
    PromptTemplate,
    generate_poem,
    postprocess,
    render_prompt,
    run_generation,
)
from .judging import (
    AggregatedScore,
    AssignmentPlan,
    Judge,
    RatingRecord,
    RatingStore,
    aggregate_scores,
    plan_assignments,
)
from .simjudge import JudgeModel, power_analysis, simulate_ratings
from .stats import (
    Criterion,
    FilterScope,
    ModelReport,
    ScoredPoem,
    WilcoxonResult,
    auc,
    auc_fraction,
    filtered_auc,
    model_report,
    wilcoxon_signed_rank,
    yan_analysis,
)

__version__ = "0.1.0"
