"""ctxrank: contextual learning-to-rank with lexical and semantic
context-document signals crossed by a small deep-cross network."""

from .corpus import (
    Dataset,
    Document,
    Judgment,
    Query,
    SynthSpec,
    gen_synthetic,
    load_dataset,
    planted_label,
    save_dataset,
    split_train_test,
)
from .embedding import EmbeddingStore, avg_pool, cosine, hash_embed, load_embeddings, save_embeddings
from .errors import DataError, NumericError
from .features import (
    AblationMask,
    FeatureExtractor,
    FeatureSchema,
    MASKS,
    Normalizer,
    apply_normalizer,
    fit_normalizer,
)
from .lexical import Bm25Params, CorpusStats, bm25, build_stats, tokenize
from .metrics import MetricsReport, average_precision, evaluate, ndcg_at_k, precision_at_k, recall_at_k
from .model_io import RankerModel, load_model, save_model
from .training import (
    TrainConfig,
    TrainPair,
    adam_step,
    grad_check,
    hinge_pair_loss,
    logistic_pair_loss,
    make_pairs,
    train,
)

__version__ = "0.1.0"
