from docseg.training.samples import TrainConfig, TrainSample, validate_train_config, WINDOW_MODES
from docseg.training.samples import build_training_samples, build_cross_segment_samples
from docseg.training.samples import tail_truncate, per_sentence_truncate
from docseg.training.train import train, build_samples, stack_samples, HEADS
from docseg.training.gradcheck import grad_check, relative_error
