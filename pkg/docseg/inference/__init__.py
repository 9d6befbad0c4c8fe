from docseg.inference.windows import SentenceTokens, DocumentTokens, tokenize_document
from docseg.inference.windows import assemble_window, pack_window, cross_segment_window
from docseg.inference.strategies import InferenceConfig, SegmentationResult, STRATEGIES, validate_inference_config
from docseg.inference.strategies import run_fixed, run_adaptive, run_cross_segment, model_scorer, fit_to_model
from docseg.inference.strategies import segment_fixed, segment_adaptive, segment_cross_segment, segment
from docseg.inference.strategies import segment_corpus, count_encoder_calls, save_segmentations, load_segmentations
