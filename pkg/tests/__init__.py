# Tests package for resunmix
