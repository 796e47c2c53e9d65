"""
dataio/synth.py
Synthetic multilingual corpus with a controllable vision channel.

The summary is the language's topic word for each of a few latent topics
(drawn from the C detector classes). With probability `informativeness` the
example has one real image per topic, in summary order; otherwise its image
count is drawn independently and every image gets a random topic.

The article mixes filler words with each topic word kept with probability
0.5, so the text alone under-determines the summary.

Each region's detected class equals its image topic with probability
`informativeness` and is uniform otherwise; q is a smoothed one-hot of that
class and the features are the class prototype plus small noise. At
informativeness 0 the image count and the regions are independent of the
summary; at 1 the arg-max classes of q spell the summary exactly.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from dataio.records import Corpus, MultimodalExample
from dataio.vocab import RESERVED
from monitoring import get_logger

log = get_logger(__name__)

TOPIC_WORD_KEEP = 0.5
FEATURE_NOISE = 0.1


class SynthSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    languages:         list[str] = Field(default_factory=lambda: ["en", "fr", "zh"])
    sizes:             list[int] = Field(default_factory=lambda: [200, 100, 50])
    vocab_size:        int   = Field(default=512, gt=len(RESERVED))
    classes:           int   = Field(default=16, ge=2)
    n_images:          int   = Field(default=3, ge=1)
    regions_per_image: int   = Field(default=4, ge=1)
    d_v:               int   = Field(default=32, ge=1)
    informativeness:   float = Field(default=1.0, ge=0.0, le=1.0)
    class_smoothing:   float = Field(default=0.1, ge=0.0, lt=1.0)
    min_images:        int   = Field(default=1, ge=1)
    article_filler:    tuple[int, int] = (6, 12)

    @model_validator(mode="after")
    def _check(self) -> "SynthSpec":
        if len(self.languages) != len(self.sizes):
            raise ValueError(f"{len(self.languages)} languages but {len(self.sizes)} sizes")
        if len(set(self.languages)) != len(self.languages):
            raise ValueError("language codes must be unique")
        if any(s < 1 for s in self.sizes):
            raise ValueError("every language size must be >= 1")
        if self.min_images > self.n_images:
            raise ValueError(f"min_images={self.min_images} exceeds n_images={self.n_images}")
        lo, hi = self.article_filler
        if lo < 0 or hi < lo:
            raise ValueError(f"article_filler must be an increasing non-negative pair, got {self.article_filler}")
        if self.filler_start >= self.vocab_size:
            raise ValueError(
                f"vocab_size={self.vocab_size} leaves no filler words for "
                f"{len(self.languages)} languages x {self.classes} topics"
            )
        return self

    @property
    def filler_start(self) -> int:
        return len(RESERVED) + len(self.languages) * self.classes

    def topic_word(self, language_index: int, topic: int) -> int:
        return len(RESERVED) + language_index * self.classes + topic


def synth_vocabulary(spec: SynthSpec) -> list[str]:
    tokens = list(RESERVED)
    for lang in spec.languages:
        tokens.extend(f"{lang}:t{c}" for c in range(spec.classes))
    tokens.extend(f"f{j}" for j in range(spec.vocab_size - spec.filler_start))
    return tokens


def _boxes(rng: np.random.Generator, count: int) -> np.ndarray:
    xs = np.sort(rng.random((count, 2)), axis=1)
    ys = np.sort(rng.random((count, 2)), axis=1)
    return np.stack([xs[:, 0], ys[:, 0], xs[:, 1], ys[:, 1]], axis=1)


def _example(spec: SynthSpec, rng: np.random.Generator, prototypes: np.ndarray,
             lang_index: int, example_id: str) -> MultimodalExample:
    n, m, c, d_v = spec.n_images, spec.regions_per_image, spec.classes, spec.d_v
    count = int(rng.integers(spec.min_images, n + 1))
    topics = rng.integers(0, c, size=count)
    if rng.random() < spec.informativeness:
        image_topics = topics
    else:
        image_topics = rng.integers(0, c, size=int(rng.integers(spec.min_images, n + 1)))
    summary = [spec.topic_word(lang_index, int(t)) for t in topics]

    lo, hi = spec.article_filler
    article: list[int] = list(rng.integers(spec.filler_start, spec.vocab_size, size=int(rng.integers(lo, hi + 1))))
    for word in summary:
        if rng.random() < TOPIC_WORD_KEEP:
            article.insert(int(rng.integers(0, len(article) + 1)), word)

    features = np.zeros((n, m, d_v), dtype=np.float32)
    boxes = np.zeros((n, m, 4), dtype=np.float32)
    q = np.zeros((n, m, c), dtype=np.float32)
    for i, topic in enumerate(image_topics):
        informative = rng.random(m) < spec.informativeness
        classes = np.where(informative, topic, rng.integers(0, c, size=m))
        onehot = np.eye(c)[classes]
        q[i] = (1.0 - spec.class_smoothing) * onehot + spec.class_smoothing / c
        features[i] = prototypes[classes] + FEATURE_NOISE * rng.normal(size=(m, d_v))
        boxes[i] = _boxes(rng, m)

    return MultimodalExample(
        id=example_id,
        language=spec.languages[lang_index],
        article_ids=np.asarray(article, dtype=np.int64),
        summary_ids=np.asarray(summary, dtype=np.int64),
        features=features,
        boxes=boxes,
        q=q,
        image_count=len(image_topics),
    )


def synth_corpus(seed: int, spec: SynthSpec) -> Corpus:
    """Deterministic in (seed, spec)."""
    rng = np.random.default_rng(seed)
    prototypes = rng.normal(size=(spec.classes, spec.d_v))
    corpus = Corpus(spec.n_images, spec.regions_per_image, spec.d_v, spec.classes)
    for k, (lang, size) in enumerate(zip(spec.languages, spec.sizes)):
        for j in range(size):
            corpus.examples.append(_example(spec, rng, prototypes, k, f"{lang}-{j:06d}"))
    log.info("Synthetic corpus generated", seed=seed, examples=len(corpus),
             languages=len(spec.languages), informativeness=spec.informativeness)
    return corpus
