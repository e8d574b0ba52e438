from django.apps import AppConfig


class VstarConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'vstar'
    verbose_name = 'V* visual search'
