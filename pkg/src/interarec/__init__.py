"""Session-aware recommendations: screenshot summaries to constrained offers.

The pipeline turns a browsing session's screenshots into a per-category
keyword summary, decomposes it into price/color constraints, and serves
either a revenue-optimal assortment under an MNL choice model or a
similarity re-ranked top-k list from a session model.
"""

from .catalog import (
    CatalogSnapshot,
    CatalogStore,
    Item,
    attribute_text,
    import_catalog,
    load_catalog_file,
    write_catalog_file,
)
from .choice import (
    Assortment,
    FeasibleSpec,
    MnlParameters,
    NO_PURCHASE,
    Transaction,
    UNBOUNDED,
    brute_force_optimal,
    estimate_mnl,
    expected_revenue,
    mnl_probability,
    optimize_assortment,
    read_mnl_params,
    read_transactions_file,
    write_mnl_params,
    write_transactions_file,
)
from .constraints import (
    ConstraintSet,
    FUNCTION_CALL_SCHEMA,
    ValidationReport,
    color_vocabulary,
    decompose,
    parse_price,
    validate,
)
from .errors import InteraRecError
from .evaluate import (
    EvalConfig,
    EvalReport,
    mrr_at_k,
    recall_at_k,
    run_experiment,
    sweep_session_window,
    sweep_training_fraction,
    write_report,
)
from .models import (
    MarkovModel,
    PopularityModel,
    SessionKnnModel,
    predict_topk,
    read_predictions,
    train_model,
    write_predictions,
)
from .rerank import (
    HashEmbeddingProvider,
    PredictionEntry,
    RankedPredictions,
    cosine,
    hash_embed,
    rerank_topk,
    summary_to_text,
)
from .service import RecommendationResponse, RecommendationService, create_app
from .sessions import (
    InteractionEvent,
    ScreenshotRef,
    Session,
    append_event,
    load_session_dataset,
    session_from_items,
    split_sessions,
    truncate_session,
)
from .summarize import (
    ABSENT,
    DEFAULT_CATEGORIES,
    KeywordSummary,
    LiveSummarizerBackend,
    MockSummarizerBackend,
    PromptSpec,
    batch_screenshots,
    build_prompt,
    merge_summaries,
    parse_summary_text,
    summarize_session,
    write_fixture,
)
from .synth import generate_corpus, simulate_transactions

__version__ = "0.1.0"
