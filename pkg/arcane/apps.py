from django.apps import AppConfig


class ArcaneConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "arcane"
    verbose_name = "ARCANE attribution workbench"
