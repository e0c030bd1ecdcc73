from django.apps import AppConfig


class GradosConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'Grados'
    verbose_name = 'Grados de retinopatía'
