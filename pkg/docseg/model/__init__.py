from docseg.model.models import ModelConfig, SegModel, validate_config, init_params, init_model
from docseg.model.models import ParamsSegModel, ParamsEmbeddings, ParamsEncoderLayer, ParamsClassifier
from docseg.model.inputs import WindowInput, WindowArrays, validate_window, pad_window, stack_windows
from docseg.model.encoder import embed_input, encode, pool_sentences, classify, forward, backward
from docseg.model.encoder import window_logits, window_probs, window_loss, batch_loss
from docseg.model.checkpoint import save_model, load_model
