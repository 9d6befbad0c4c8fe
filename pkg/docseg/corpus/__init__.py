from docseg.corpus.documents import Sentence, Document, Corpus
from docseg.corpus.documents import make_document, with_labels, validate_document, validate_corpus
from docseg.corpus.documents import load_records, save_records, split_corpus, corpus_words
from docseg.corpus.wiki import parse_wiki_text, split_sentences
from docseg.corpus.synthetic import SynthSpec, generate_synthetic
from docseg.corpus.lexicon import PhoneLexicon, make_lexicon, load_lexicon, save_lexicon
from docseg.corpus.lexicon import phone_inventory, homophone_classes, synthetic_lexicon
from docseg.corpus.lexicon import apply_homophone_noise, apply_corpus_noise
