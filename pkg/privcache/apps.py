from django.apps import AppConfig


class PrivcacheConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'privcache'
    verbose_name = 'Private coded caching audits'
