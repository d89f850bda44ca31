"""scikit-learn compatible wrappers around the networks and baselines.

These give the models the usual ``fit`` / ``predict`` / ``predict_proba``
surface, ``get_params`` / ``set_params`` and ``clone`` support, so they slot
into pipelines and model-selection utilities.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .baselines import lr_train, nb_posterior, nb_train
from .data import FEATURE_NAMES, RawRecord, encode_record, normalize_name, parse_fields
from .network import TrainConfig, build_arch, train


class _BinaryClassifier(ClassifierMixin, BaseEstimator):
    def _validate_fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise ValueError(f"expected exactly two classes, got {len(self.classes_)}")
        self.n_features_in_ = X.shape[1]
        return X, (y == self.classes_[1]).astype(np.int64)

    def _validate_predict(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but {type(self).__name__} "
                             f"was fitted with {self.n_features_in_}")
        return X

    def _positive_proba(self, X):
        raise NotImplementedError

    def predict_proba(self, X):
        p = self._positive_proba(self._validate_predict(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        # ties at 0.5 go to the positive class
        p = self._positive_proba(self._validate_predict(X))
        return self.classes_[(p >= 0.5).astype(np.int64)]


class NetworkClassifier(_BinaryClassifier):
    """Preset network (``nn``, ``vw`` or ``vb``) trained with mini-batch Adam.

    After fitting, ``network_`` holds the trained :class:`~vwnet.network.Network`
    and ``history_`` the per-epoch loss and accuracy.
    """

    def __init__(self, arch="vw", epochs=200, learning_rate=1e-3, batch_size=32,
                 beta1=0.9, beta2=0.999, epsilon=1e-8, seed=42, shuffle=True):
        self.arch = arch
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.seed = seed
        self.shuffle = shuffle

    def fit(self, X, y):
        X, y01 = self._validate_fit(X, y)
        cfg = TrainConfig(learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
                          epsilon=self.epsilon, batch_size=self.batch_size, epochs=self.epochs,
                          seed=self.seed, shuffle=self.shuffle)
        spec = build_arch(self.arch, X.shape[1])
        self.network_, self.history_ = train(spec, (X, y01), cfg)
        return self

    def _positive_proba(self, X):
        return self.network_.forward(X)[:, 0]


class NaiveBayesClassifier(_BinaryClassifier):
    """Naive Bayes over the encoded symptom features (age as five bands)."""

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        X, y01 = self._validate_fit(X, y)
        self.model_ = nb_train((X, y01), self.alpha)
        return self

    def _positive_proba(self, X):
        return nb_posterior(self.model_, X)


class GradientDescentLogisticRegression(_BinaryClassifier):
    """Unregularized logistic regression fitted by full-batch gradient descent."""

    def __init__(self, learning_rate=0.1, epochs=500):
        self.learning_rate = learning_rate
        self.epochs = epochs

    def fit(self, X, y):
        X, y01 = self._validate_fit(X, y)
        self.model_ = lr_train((X, y01), self.learning_rate, self.epochs)
        self.coef_ = self.model_.weights[None, :].copy()
        self.intercept_ = np.array([self.model_.intercept])
        return self

    def _positive_proba(self, X):
        return self.model_.probability(X)


class SymptomEncoder(TransformerMixin, BaseEstimator):
    """Turn questionnaire answers into the 16-column feature matrix.

    Accepts :class:`~vwnet.data.RawRecord` objects or mappings from column
    name to answer text (header spelling is normalized, so ``"Sex"`` works).
    """

    def fit(self, X=None, y=None):
        self.n_features_out_ = len(FEATURE_NAMES)
        return self

    def transform(self, X):
        rows = []
        for i, item in enumerate(X):
            if not isinstance(item, RawRecord):
                mapping = {normalize_name(str(k)) or str(k): v for k, v in dict(item).items()}
                item = parse_fields(mapping, row=i + 1, require_class=False)
            rows.append(encode_record(item)[0])
        return np.array(rows).reshape(-1, len(FEATURE_NAMES))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)
