"""Configura Django para que pytest pueda recolectar y correr Grados/tests."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'Retigp.settings')
django.setup()
