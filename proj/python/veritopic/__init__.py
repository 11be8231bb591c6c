"""Topic-fused fake news classification: Python access to the C++ core."""

from veritopic._core import (  # noqa: F401
    EvalReport,
    LdaConfig,
    MlpClassifier,
    TopicModel,
    TrainConfig,
    Vocabulary,
    __version__,
    adam_step,
    baseline_encode,
    build_vocabulary,
    conditional_distribution,
    confusion_matrix,
    encode_document,
    ensemble_predictions,
    forward,
    fuse,
    infer_theta,
    load_stopwords,
    loss_and_gradients,
    preprocess_text,
    read_embedding_file,
    run_cli,
    train_classifier,
    train_lda,
    weighted_prf,
    write_embedding_file,
)
