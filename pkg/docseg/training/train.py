import logging
from typing import List, Optional, Sequence, Tuple

import jax.numpy as jnp
import jax.random as jr
import numpy as np
import optax
from fastprogress.fastprogress import progress_bar
from jax import jit, value_and_grad

from docseg.corpus.documents import Corpus
from docseg.corpus.lexicon import PhoneLexicon
from docseg.evaluation.metrics import evaluate_segmentations
from docseg.inference.strategies import InferenceConfig, segment_corpus
from docseg.model.encoder import batch_loss
from docseg.model.inputs import WindowArrays, pad_labels, pad_window, stack_windows
from docseg.model.models import ModelConfig, SegModel, init_model, validate_config
from docseg.tokenizer.wordpiece import Vocab
from docseg.training.samples import (TrainConfig, TrainSample, build_cross_segment_samples, build_training_samples,
                                     validate_train_config)
from docseg.utils.optimize import make_optimizer, sample_minibatches

logger = logging.getLogger(__name__)

HEADS = ("sentence", "cls")


def stack_samples(samples: Sequence[TrainSample], num_tokens: int, num_sentences: int,
                  phone_width: int = 1) -> Tuple[WindowArrays, np.ndarray]:
    r"""Pad and stack samples, appending one empty window used to fill short batches.

    Returns:
        window arrays and labels with ``len(samples) + 1`` rows.

    """
    rows = [pad_window(s.window, num_tokens, num_sentences, phone_width) for s in samples]
    empty = WindowArrays(np.zeros(num_tokens, np.int32), np.zeros(num_tokens, bool),
                         np.full(num_tokens, -1, np.int32), np.zeros(num_sentences, bool),
                         np.zeros((num_tokens, phone_width), np.int32), np.zeros((num_tokens, phone_width), bool))
    arrays = stack_windows(rows + [empty])
    labels = np.stack([pad_labels(s.labels, num_sentences) for s in samples] + [np.zeros(num_sentences, np.int32)])
    return arrays, labels


def build_samples(corpus: Corpus, vocab: Vocab, lexicon: Optional[PhoneLexicon], cfg: TrainConfig,
                  head: str = "sentence", left: int = 128, right: int = 128) -> List[TrainSample]:
    samples = []
    for doc in corpus.documents:
        if head == "sentence":
            samples.extend(build_training_samples(doc, vocab, lexicon, cfg))
        else:
            samples.extend(build_cross_segment_samples(doc, vocab, lexicon, left, right))
    return samples


def _dev_config(cfg: TrainConfig, head: str, left: int, right: int) -> InferenceConfig:
    if head == "cls":
        return InferenceConfig(strategy="cross_segment", left_context=left, right_context=right)
    return InferenceConfig(strategy="fixed", window_token_budget=cfg.max_seq_len,
                           max_window_sentences=cfg.max_sentences, step=1)


def train(corpus: Corpus,
          model_config: ModelConfig,
          train_config: TrainConfig,
          vocab: Vocab,
          lexicon: Optional[PhoneLexicon] = None,
          dev: Optional[Corpus] = None,
          head: str = "sentence",
          left_context: int = 128,
          right_context: int = 128,
          verbose: bool = False) -> Tuple[SegModel, List[float]]:
    r"""Train a segmentation model from scratch.

    Samples are shuffled every epoch with a key derived from
    ``train_config.seed``; dropout keys are derived the same way, so a run is
    reproducible. With ``head="cls"`` the cross-segment baseline is trained
    on one sample per candidate break.

    Args:
        corpus: labeled training documents.
        model_config: architecture.
        train_config: training settings.
        vocab: subword vocabulary.
        lexicon: phone lexicon (required iff ``model_config.use_phone``).
        dev: optional dev corpus; the model with the best dev F1 is returned.
            Training stops early once it reaches ``train_config.target_dev_f1``.
        head: ``sentence`` for the windowed model or ``cls`` for the baseline.
        left_context: baseline left context in tokens.
        right_context: baseline right context in tokens.
        verbose: show a progress bar.

    Returns:
        the trained model and the mean training loss of every epoch.

    Raises:
        FloatingPointError: if the loss becomes non-finite.

    """
    validate_config(model_config)
    validate_train_config(train_config)
    if head not in HEADS:
        raise ValueError(f"unknown head {head!r}")
    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    if model_config.use_phone and lexicon is None:
        raise ValueError("use_phone requires a lexicon")
    if not model_config.use_phone:
        lexicon = None

    samples = build_samples(corpus, vocab, lexicon, train_config, head, left_context, right_context)
    if not samples:
        raise ValueError("corpus yields no training samples")
    num_tokens = max(len(s.window.token_ids) for s in samples)
    if num_tokens > model_config.max_seq_len:
        raise ValueError(f"training windows of {num_tokens} tokens exceed max_seq_len={model_config.max_seq_len}")
    num_sentences = max(s.window.num_sentences for s in samples)
    phone_width = lexicon.max_phones if lexicon is not None else 1
    arrays, labels = stack_samples(samples, num_tokens, num_sentences, phone_width)
    labels = jnp.asarray(labels)
    logger.info("training on %d samples padded to %d tokens and %d sentences", len(samples), num_tokens, num_sentences)

    init_key, loop_key = jr.split(jr.PRNGKey(train_config.seed))
    model = init_model(model_config, init_key)
    optimizer = make_optimizer(train_config.learning_rate, train_config.adam_beta1, train_config.adam_beta2,
                               train_config.adam_eps, train_config.grad_accumulation)

    @jit
    def train_step(params, opt_state, index, key):
        batch = WindowArrays(*(x[index] for x in arrays))
        loss, grads = value_and_grad(batch_loss)(params, batch, labels[index], model_config, key)
        updates, opt_state = optimizer.update(grads, opt_state, params)
        return optax.apply_updates(params, updates), opt_state, loss

    params, opt_state = model.params, optimizer.init(model.params)
    best_params, best_f1 = params, -1.0
    dev_config = _dev_config(train_config, head, left_context, right_context)
    num_samples, batch_size = len(samples), train_config.batch_size
    losses = []

    epochs = range(train_config.epochs)
    for epoch in (progress_bar(epochs) if verbose else epochs):
        epoch_key = jr.fold_in(loop_key, epoch)
        epoch_losses = []
        batches = sample_minibatches(epoch_key, num_samples, batch_size, train_config.shuffle)
        for step, index in enumerate(batches):
            # short batches are filled with the empty window in the last row
            index = jnp.concatenate([index, jnp.full(batch_size - len(index), num_samples, index.dtype)])
            params, opt_state, loss = train_step(params, opt_state, index, jr.fold_in(epoch_key, step + 1))
            if not np.isfinite(float(loss)):
                raise FloatingPointError(f"non-finite training loss at epoch {epoch}, step {step}")
            epoch_losses.append(float(loss))
        losses.append(float(np.mean(epoch_losses)))

        message = f"epoch {epoch}: loss {losses[-1]:.4f}"
        if dev is not None:
            results = segment_corpus(dev, SegModel(model_config, params), dev_config, vocab, lexicon)
            f1 = evaluate_segmentations(results, dev).f1
            message += f", dev F1 {f1:.4f}"
            if f1 > best_f1:
                best_params, best_f1 = params, f1
        logger.info(message)
        if dev is not None and train_config.target_dev_f1 is not None and best_f1 >= train_config.target_dev_f1:
            logger.info("dev F1 %.4f reached the target after %d epochs", best_f1, epoch + 1)
            break

    if dev is None or train_config.epochs == 0:
        best_params = params
    return SegModel(model_config, best_params), losses
