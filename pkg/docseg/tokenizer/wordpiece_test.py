import pytest

from docseg.corpus.documents import Corpus, Sentence, make_document
from docseg.corpus.synthetic import SynthSpec, generate_synthetic
from docseg.tokenizer.wordpiece import UNK, SPECIAL_TOKENS, make_vocab, build_vocab, save_vocab, load_vocab
from docseg.tokenizer.wordpiece import tokenize_word, tokenize_sentence, detokenize


def single_word_corpus(word):
    return Corpus((make_document("d", [[word]], [True]),))


def test_toy_vocab_contents():
    vocab = build_vocab(single_word_corpus("ab"), max_size=100)
    assert set(vocab.tokens) == set(SPECIAL_TOKENS) | {"a", "b", "ab", "##b"}
    assert vocab.tokens[:4] == SPECIAL_TOKENS


def test_vocab_deterministic():
    corpus = generate_synthetic(SynthSpec(n_docs=5, seed=0))
    assert build_vocab(corpus, 60) == build_vocab(corpus, 60)


def test_vocab_respects_max_size():
    corpus = generate_synthetic(SynthSpec(n_docs=5, seed=0))
    assert len(build_vocab(corpus, 40)) == 40


def test_max_size_too_small():
    with pytest.raises(ValueError):
        build_vocab(single_word_corpus("abc"), max_size=7)


def test_empty_corpus():
    with pytest.raises(ValueError):
        build_vocab(Corpus(()), max_size=10)


def test_whole_word():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a", "##b", "ab"])
    assert tokenize_word("ab", vocab) == [vocab.id_of["ab"]]


def test_greedy_pieces():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a", "##b"])
    assert tokenize_word("ab", vocab) == [vocab.id_of["a"], vocab.id_of["##b"]]


def test_greedy_prefers_longest_match():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a", "ab", "##c", "##b", "##bc"])
    assert tokenize_word("abc", vocab) == [vocab.id_of["ab"], vocab.id_of["##c"]]


def test_unknown_character_maps_whole_word_to_unk():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a", "##b"])
    assert tokenize_word("abz", vocab) == [UNK]
    assert tokenize_word("z", vocab) == [UNK]


def test_special_token_spelling_is_plain_text():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a"])
    for special in SPECIAL_TOKENS:
        assert tokenize_word(special, vocab) == [UNK]
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["[", "##SEP]", "##CLS]"])
    assert tokenize_word("[SEP]", vocab) == [vocab.id_of["["], vocab.id_of["##SEP]"]]
    assert tokenize_sentence(Sentence(("[CLS]",), True), vocab).token_ids == (vocab.id_of["["], vocab.id_of["##CLS]"])


def test_sentence_spans():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a", "##b", "c"])
    tokenized = tokenize_sentence(Sentence(("ab", "c"), True), vocab)
    assert tokenized.token_ids == (vocab.id_of["a"], vocab.id_of["##b"], vocab.id_of["c"])
    assert tokenized.word_spans == ((0, 2), (2, 3))


def test_single_token_words():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["x", "y", "z"])
    tokenized = tokenize_sentence(Sentence(("x", "y", "z"), True), vocab)
    assert tokenized.word_spans == ((0, 1), (1, 2), (2, 3))


def test_spans_partition_tokens():
    corpus = generate_synthetic(SynthSpec(n_docs=5, seed=2))
    vocab = build_vocab(corpus, 80)
    for doc in corpus.documents:
        for sentence in doc.sentences:
            tokenized = tokenize_sentence(sentence, vocab)
            assert tokenized.word_spans[0][0] == 0
            assert tokenized.word_spans[-1][1] == len(tokenized.token_ids)
            for (s0, e0), (s1, e1) in zip(tokenized.word_spans[:-1], tokenized.word_spans[1:]):
                assert s0 < e0 == s1 < e1


def test_every_corpus_word_tokenizes_without_unk():
    corpus = generate_synthetic(SynthSpec(n_docs=5, seed=2))
    vocab = build_vocab(corpus, 80)
    for doc in corpus.documents:
        for sentence in doc.sentences:
            assert UNK not in tokenize_sentence(sentence, vocab).token_ids


def test_vocab_file_round_trip(tmp_path):
    corpus = generate_synthetic(SynthSpec(n_docs=3, seed=0))
    vocab = build_vocab(corpus, 50)
    path = tmp_path / "vocab.txt"
    save_vocab(vocab, path)
    loaded = load_vocab(path)
    assert loaded == vocab
    sentence = corpus.documents[0].sentences[0]
    assert tokenize_sentence(sentence, loaded) == tokenize_sentence(sentence, vocab)


def test_vocab_file_requires_specials(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("a\nb\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_vocab(path)


def test_detokenize():
    vocab = make_vocab(list(SPECIAL_TOKENS) + ["a", "##b", "c"])
    tokenized = tokenize_sentence(Sentence(("ab", "c"), True), vocab)
    assert detokenize(tokenized.token_ids, vocab) == ["a", "##b", "c"]
