typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern FILE *fopen(const char *path, const char *mode);
extern int fclose(FILE *stream);
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);

static int checksum(const char *p, int n) {
  int sum = 0;
  int i;
  for (i = 0; i < n; i++)
    sum = sum + p[i];
  return sum;
}

void load(FILE *f, int *out) {
  int tmp = 0;
  fread(&tmp, sizeof(int), 1, f);
  *out = tmp;
}

void process(FILE *f) {
  char src[512];
  char dst[64];
  int n;
  int m;
  memset(src, 'o', sizeof(src));
  load(f, &n);
  memcpy(&m, &n, sizeof(m));
  if (m > 64) {
    printf("reject %d\n", m);
    exit(2);
  }
  memcpy(dst, src, m);
  printf("m %d sum %d\n", m, checksum(dst, m));
}

int main(int argc, char **argv) {
  FILE *f;
  if (argc < 2)
    return 2;
  f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  process(f);
  fclose(f);
  return 0;
}
