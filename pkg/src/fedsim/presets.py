"""Named configuration presets.

"desk-default" is the package's default profile (20 devices, tiny
synthetic task, finishes in seconds). The "table3-*" presets carry the
reference hyperparameter surface for the large-scale setups those runs
were tuned on; they keep the desk-scale synthetic task since the
original models/datasets are out of scope here.
"""

from .errors import ConfigError

_TABLE3_COMMON = {
    "m": 100,
    "m_prime": 10,
    "T": 500,
    "tau": 99,
    "trigger_period": 10.0,
    "eta_rl": 0.001,
}

# (eta_lambda, eta_sigma, eta_iota, eta_gamma, eta_upsilon, eta_i)
_TABLE3_RATES = {
    "table3-lenet-fmnist": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.005),
    "table3-lenet-cifar10": (0.001, 0.001, 0.1, 0.1, 0.001, 0.03),
    "table3-lenet-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-cnn-cifar10": (0.001, 0.001, 0.0001, 0.1, 0.001, 0.028),
    "table3-cnn-cifar100": (0.00001, 0.00001, 0.00001, 0.00001, 0.00001, 0.013),
    "table3-resnet-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-resnet-tinyimagenet": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-alexnet-cifar10": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-alexnet-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-vgg-cifar10": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-vgg-cifar100": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.03),
    "table3-textcnn-imdb": (0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.001),
}


def _table3(name):
    el, es, ei, eg, eu, lr = _TABLE3_RATES[name]
    preset = dict(_TABLE3_COMMON)
    preset.update(
        {
            "eta_lambda": el,
            "eta_sigma": es,
            "eta_iota": ei,
            "eta_gamma": eg,
            "eta_upsilon": eu,
            "eta_i": lr,
        }
    )
    return preset


PRESETS = {"desk-default": {}}
PRESETS.update({name: _table3(name) for name in _TABLE3_RATES})


def preset_names():
    return sorted(PRESETS)


def get_preset(name):
    if name not in PRESETS:
        raise ConfigError([f"preset: unknown preset {name!r}; known: {', '.join(preset_names())}"])
    return dict(PRESETS[name])
