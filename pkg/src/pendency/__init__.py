"""Court-case pendency prediction: data pipeline, decision forests, metrics,
and attribution, plus a file-composed CLI."""

__version__ = "0.1.0"

from .attribution import Attribution, TreeShapExplainer, tree_shap
from .court_data import (
    CaseRecord,
    CleanStats,
    SyntheticSpec,
    clean,
    generate_synthetic,
    impute_missing,
    join_metadata,
    parse_case_csv,
)
from .decision_forests import (
    EnsembleModel,
    TreeModel,
    TreeParams,
    impurity_importance,
    load_model,
    predict_proba,
    save_model,
    train_bagging,
    train_gbdt,
    train_random_forest,
    train_tree,
)
from .errors import DataError, NotFittedError, PendencyError, SchemaError, SearchBudgetError
from .evaluation import (
    ConfusionMatrix,
    EvaluationReport,
    classification_metrics,
    confusion,
    evaluate_classifier,
    log_loss,
    pr_auc,
    roc_auc,
)
from .feature_pipeline import (
    EncodedMatrix,
    EncoderBundle,
    LabelEncoder,
    OneHotEncoder,
    PendencyClass2,
    PendencyClass5,
    SvdModel,
    duration_days,
    fit_encoder_bundle,
    fit_label_encoder,
    fit_one_hot,
    hashing_encode,
    stratified_split,
    target_binary,
    target_multiclass,
    truncated_svd,
)
from .model_search import SearchResult, SearchSpace, TrialResult, run_search, three_way_split
