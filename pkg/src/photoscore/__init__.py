"""Product-photo quality toolkit: crowd label aggregation, handcrafted
image features with GrabCut segmentation, ordinal and logistic regression
analyses, and a label-smoothing classifier with forced-choice evaluation.
"""

from .annotation import (
    ImageScore,
    QualityLabel,
    StandardizedRating,
    aggregate_image_scores,
    discretize,
    filter_by_disagreement,
    mean_pairwise_pearson,
    standardize_raters,
)
from .classify import (
    ClassifierModel,
    TrainConfig,
    forced_choice_accuracy,
    log_softmax,
    predict_logits,
    smoothing_loss,
    top1_accuracy,
    train_classifier,
)
from .corpus import (
    BoundingBox,
    FeatureVector,
    Image,
    ListingCorpus,
    ListingMeta,
    RatingRecord,
    SynthSpec,
    decode_image,
    generate_synthetic_corpus,
    load_manifest,
    read_feature_table,
    write_feature_table,
)
from .detect import (
    ObjectFeatures,
    agreement_filter,
    detection_label_table,
    iou,
    map50,
    object_features,
)
from .errors import (
    FitError,
    FormulaError,
    ManifestError,
    PhotoscoreError,
    SegmentationError,
)
from .extract import extract_features
from .photometry import GlobalFeatures, global_features, michelson_contrast, to_grayscale
from .segment import GrabCutParams, Mask, RegionalFeatures, grabcut, regional_features
from .stats import (
    DesignMatrix,
    Formula,
    LogisticFit,
    OrdinalFit,
    chi_squared,
    chi_squared_tail,
    evaluate_formula,
    fit_logistic,
    fit_ordinal,
    kfold_accuracy,
    parse_formula,
    pearson,
)

__version__ = "0.1.0"
