from docseg.annotation.aggregate import AnnotationSet, make_annotation_set, screen, loo_scores, aggregate_topk
from docseg.annotation.aggregate import load_annotations, aggregate_corpus
