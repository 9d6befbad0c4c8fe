from docseg.tokenizer.wordpiece import PAD, UNK, CLS, SEP, SPECIAL_TOKENS, CONTINUATION
from docseg.tokenizer.wordpiece import Vocab, TokenizedSentence
from docseg.tokenizer.wordpiece import make_vocab, build_vocab, save_vocab, load_vocab
from docseg.tokenizer.wordpiece import tokenize_word, tokenize_sentence, detokenize
