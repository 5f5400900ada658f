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

void process(FILE *f) {
  char src[512];
  char d1[128];
  char d2[128];
  int a = 0;
  int b = 0;
  int total;
  memset(src, 't', sizeof(src));
  fread(&a, sizeof(int), 1, f);
  fread(&b, sizeof(int), 1, f);
  total = a + b;
  if (total > 128) {
    printf("total %d too large\n", total);
    exit(1);
  }
  memcpy(d1, src, total);
  memcpy(d2, src, total);
  printf("total %d sums %d %d\n", total, checksum(d1, total), checksum(d2, total));
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
