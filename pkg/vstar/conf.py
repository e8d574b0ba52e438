"""App settings live in the VSTAR setting and are read as `vstar_settings.MIN_SIDE`."""
from django.conf import settings
from django.core.signals import setting_changed

DEFAULTS = {
    # Search
    'MIN_SIDE': 224,
    'HIGH_CONF': 0.5,
    'LOW_CONF': 0.3,
    'DELTA_BASE': 6.0,
    'DELTA_DECAY': 0.7,
    'DELTA_FLOOR': 3.0,

    # Perception
    'HEATMAP_GRID': 16,
    'CUE_AMPLITUDE': 6.0,
    'ORACLE_CONFIDENCE': 0.9,
    'FIXATION_AMPLITUDE': 6.0,
    'FIXATION_GAMMAS': [0.9, 0.8],
    'REMOTE_TIMEOUT': 10.0,
    'REMOTE_RETRIES': 3,
    'SERVER_SCENE': None,

    # SEAL
    'CROP_MARGIN': 0.2,

    # Bench
    'BENCH_SCENES': 200,
    'BENCH_EXTENT': 2048,
    'BENCH_TARGET_SIZE': (40, 120),
    'BENCH_BOOTSTRAP_RESAMPLES': 10000,
    'BENCH_WORKERS': 1,
}


class VStarSettings:
    def __init__(self, defaults=None):
        self.defaults = defaults or DEFAULTS
        self._cached_attrs = set()

    @property
    def user_settings(self):
        if not hasattr(self, '_user_settings'):
            self._user_settings = getattr(settings, 'VSTAR', {})
        return self._user_settings

    def __getattr__(self, attr):
        if attr not in self.defaults:
            raise AttributeError(f"Invalid VSTAR setting: '{attr}'")
        val = self.user_settings.get(attr, self.defaults[attr])
        self._cached_attrs.add(attr)
        setattr(self, attr, val)
        return val

    def reload(self):
        for attr in self._cached_attrs:
            delattr(self, attr)
        self._cached_attrs.clear()
        if hasattr(self, '_user_settings'):
            delattr(self, '_user_settings')


vstar_settings = VStarSettings(DEFAULTS)


def reload_vstar_settings(*args, **kwargs):
    if kwargs['setting'] == 'VSTAR':
        vstar_settings.reload()


setting_changed.connect(reload_vstar_settings)
