"""Language-model-driven coding, computable priors, and few-shot selection.

Subpackages/modules:

- ``bits``: bit strings, Elias gamma coding, prefix-free program files
- ``models``: uniform and n-gram next-token models
- ``codec``: arithmetic coding of token sequences under a model
- ``prior``: computable prior over sequences and next-symbol predictions
- ``convergence``: Monte Carlo lab for online prediction error
- ``fewshot``: confidence-based few-shot example selection and evaluation
- ``remote``: clients for hosted-model label probabilities
- ``cli``: command-line entry point (``python -m lmprior``)
"""

__version__ = "0.1.0"
